#include "tilepress/perron.hpp"

#include <algorithm>
#include <cmath>

#include "tilepress/common.hpp"
#include "tilepress/kernels.hpp"
#include "tilepress/parallel.hpp"

namespace tp {

Csr transpose(const Csr& a) {
    Csr t;
    t.n = a.n;
    t.ptr.assign(a.n + 1, 0);
    for (int c : a.col) t.ptr[c + 1]++;
    for (int i = 0; i < a.n; ++i) t.ptr[i + 1] += t.ptr[i];
    t.col.resize(a.nnz());
    t.val.resize(a.nnz());
    std::vector<std::size_t> fill(t.ptr.begin(), t.ptr.end() - 1);
    for (int i = 0; i < a.n; ++i)
        for (std::size_t k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
            std::size_t p = fill[a.col[k]]++;
            t.col[p] = i;
            t.val[p] = a.val[k];
        }
    return t;
}

void multiply(const Csr& a, const std::vector<double>& x, std::vector<double>& y) {
    y.assign(a.n, 0.0);
    parallel_for(a.n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double s = 0;
            for (std::size_t k = a.ptr[i]; k < a.ptr[i + 1]; ++k) s += a.val[k] * x[a.col[k]];
            y[i] = s;
        }
    });
}

Csr restrict_to(const Csr& a, const std::vector<int>& keep) {
    std::vector<int> where(a.n, -1);
    for (std::size_t i = 0; i < keep.size(); ++i) where[keep[i]] = static_cast<int>(i);
    Csr r;
    for (int i : keep) {
        for (std::size_t k = a.ptr[i]; k < a.ptr[i + 1]; ++k)
            if (where[a.col[k]] >= 0) {
                r.col.push_back(where[a.col[k]]);
                r.val.push_back(a.val[k]);
            }
        r.add_row();
    }
    return r;
}

PerronResult perron_right(const Csr& a, double tol, int max_iter) {
    if (a.n == 0) throw Error("empty_chain", "chain has no states");
    PerronResult res;
    std::vector<double> x(a.n, 1.0), y;
    double best_gap = INFINITY;
    int stall = 0;
    for (int it = 1; it <= max_iter; ++it) {
        multiply(a, x, y);
        if (res.shift != 0) kernels::axpy(res.shift, x.data(), y.data(), a.n);
        double lo, hi;
        if (!kernels::ratio_bounds(y.data(), x.data(), a.n, &lo, &hi))
            throw Error("perron", "iteration vector vanished");
        res.lo = lo - res.shift;
        res.hi = hi - res.shift;
        res.iterations = it;
        double top = *std::max_element(y.begin(), y.end());
        if (!(top > 0)) throw Error("perron", "matrix annihilates the iteration vector");
        kernels::scale(1.0 / top, y.data(), a.n);
        x.swap(y);
        double gap = hi - lo;
        if (gap <= tol * hi) {
            res.converged = true;
            break;
        }
        // bounds stuck: the chain is periodic, so iterate with A + sI instead
        if (gap < best_gap * (1 - 1e-9)) {
            best_gap = gap;
            stall = 0;
        } else if (++stall > 50 && res.shift == 0) {
            res.shift = std::max(hi, 1e-300);
            best_gap = INFINITY;
            stall = 0;
        }
    }
    res.lambda = (res.lo + res.hi) / 2;
    res.vec = std::move(x);
    if (!res.converged) throw Error("nonconvergence", "Perron iteration did not converge");
    return res;
}

Components strongly_connected(const Csr& a) {
    // iterative Tarjan
    Components c;
    c.comp.assign(a.n, -1);
    std::vector<int> index(a.n, -1), low(a.n, 0), stack;
    std::vector<char> on(a.n, 0);
    std::vector<std::pair<int, std::size_t>> call;
    int counter = 0;
    for (int s = 0; s < a.n; ++s) {
        if (index[s] >= 0) continue;
        call.push_back({s, a.ptr[s]});
        index[s] = low[s] = counter++;
        stack.push_back(s);
        on[s] = 1;
        while (!call.empty()) {
            auto& [v, k] = call.back();
            if (k < a.ptr[v + 1]) {
                int w = a.col[k++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on[w] = 1;
                    call.push_back({w, a.ptr[w]});
                } else if (on[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            int done = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
            if (low[done] == index[done]) {
                int w;
                int size = 0;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on[w] = 0;
                    c.comp[w] = c.count;
                    ++size;
                } while (w != done);
                bool cyc = size > 1;
                if (!cyc)
                    for (std::size_t k2 = a.ptr[done]; k2 < a.ptr[done + 1]; ++k2) cyc = cyc || a.col[k2] == done;
                c.nontrivial.push_back(cyc);
                ++c.count;
            }
        }
    }
    return c;
}

std::vector<int> essential_nodes(const Csr& a) {
    std::vector<int> out_deg(a.n, 0), in_deg(a.n, 0);
    Csr t = transpose(a);
    for (int i = 0; i < a.n; ++i) {
        out_deg[i] = static_cast<int>(a.ptr[i + 1] - a.ptr[i]);
        in_deg[i] = static_cast<int>(t.ptr[i + 1] - t.ptr[i]);
    }
    std::vector<char> dead(a.n, 0);
    std::vector<int> queue;
    for (int i = 0; i < a.n; ++i)
        if (out_deg[i] == 0 || in_deg[i] == 0) {
            dead[i] = 1;
            queue.push_back(i);
        }
    while (!queue.empty()) {
        int v = queue.back();
        queue.pop_back();
        for (std::size_t k = a.ptr[v]; k < a.ptr[v + 1]; ++k) {
            int w = a.col[k];
            if (!dead[w] && --in_deg[w] == 0) { dead[w] = 1; queue.push_back(w); }
        }
        for (std::size_t k = t.ptr[v]; k < t.ptr[v + 1]; ++k) {
            int w = t.col[k];
            if (!dead[w] && --out_deg[w] == 0) { dead[w] = 1; queue.push_back(w); }
        }
    }
    std::vector<int> keep;
    for (int i = 0; i < a.n; ++i)
        if (!dead[i]) keep.push_back(i);
    return keep;
}

}  // namespace tp
