// Constrained minimization of the level-1 rate over Markov measures on the l-word chain:
// variables are edge frequencies p_e, the objective is P(phi) - h(p) - <phi, p>.
#include <cmath>

#include <Eigen/Dense>

#include "tilepress/thermo.hpp"

namespace tp {

double constrained_rate(const Cells& cells, const Potential& phi, const Potential& psi, double x) {
    const int l = std::max(phi.level, psi.level);
    Potential a = lift(cells, phi, l), b = lift(cells, psi, l);
    const Subsystem full = full_subsystem(cells.rule());
    SpectralData sd = spectral(cells, full, a);
    const Csr& g = sd.m;
    const int S = g.n;
    const int E = static_cast<int>(g.nnz());
    std::vector<int> src(E), dst(E);
    std::vector<double> fphi(E), fpsi(E);
    for (int i = 0; i < S; ++i) {
        const Word& w = sd.chain.words[sd.states[i]];
        double vp = a.v[cells.rank(w.data(), l)], vq = b.v[cells.rank(w.data(), l)];
        for (std::size_t k = g.ptr[i]; k < g.ptr[i + 1]; ++k) {
            src[k] = i;
            dst[k] = g.col[k];
            fphi[k] = vp;
            fpsi[k] = vq;
        }
    }
    // constraints: flow balance at states 0..S-2, total mass, mean of psi
    const int C = S + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(C, E);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(C);
    for (int e = 0; e < E; ++e) {
        if (src[e] < S - 1) A(src[e], e) += 1;
        if (dst[e] < S - 1) A(dst[e], e) -= 1;
        A(S - 1, e) = 1;
        A(S, e) = fpsi[e];
    }
    rhs(S - 1) = 1;
    rhs(S) = x;

    Eigen::VectorXd p = Eigen::VectorXd::Constant(E, 1.0 / E), nu = Eigen::VectorXd::Zero(C);
    auto residual = [&](const Eigen::VectorXd& pp, const Eigen::VectorXd& vv, Eigen::VectorXd& r) {
        std::vector<double> q(S, 0.0);
        for (int e = 0; e < E; ++e) q[src[e]] += pp(e);
        r.resize(E + C);
        for (int e = 0; e < E; ++e) r(e) = std::log(pp(e) / q[src[e]]) - fphi[e];
        r.head(E) += A.transpose() * vv;
        r.tail(C) = A * pp - rhs;
    };
    Eigen::VectorXd r;
    residual(p, nu, r);
    for (int it = 0; it < 200 && r.norm() > 1e-13; ++it) {
        std::vector<double> q(S, 0.0);
        for (int e = 0; e < E; ++e) q[src[e]] += p(e);
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(E + C, E + C);
        for (int e = 0; e < E; ++e) {
            K(e, e) += 1.0 / p(e);
            for (int f = 0; f < E; ++f)
                if (src[f] == src[e]) K(e, f) -= 1.0 / q[src[e]];
        }
        K.block(0, E, E, C) = A.transpose();
        K.block(E, 0, C, E) = A;
        Eigen::VectorXd d = K.completeOrthogonalDecomposition().solve(-r);
        double step = 1.0;
        const double norm0 = r.norm();
        Eigen::VectorXd np, nv, nr;
        while (step > 1e-12) {
            np = p + step * d.head(E);
            nv = nu + step * d.tail(C);
            if (np.minCoeff() > 0) {
                residual(np, nv, nr);
                if (nr.norm() <= (1 - 0.01 * step) * norm0) break;
            }
            step *= 0.5;
        }
        if (step <= 1e-12) break;
        p = np;
        nu = nv;
        r = nr;
    }
    if (r.norm() > 1e-8) throw Error("nonconvergence", "constrained rate minimization did not converge");
    std::vector<double> q(S, 0.0);
    for (int e = 0; e < E; ++e) q[src[e]] += p(e);
    double value = sd.log_lambda;
    for (int e = 0; e < E; ++e) value += p(e) * (std::log(p(e) / q[src[e]]) - fphi[e]);
    return value;
}

}  // namespace tp
