#pragma once

#include <cstddef>
#include <vector>

namespace tp {

// Sparse nonnegative matrix in row form: entry (i, col[k]) = val[k] for k in [ptr[i], ptr[i+1]).
struct Csr {
    int n = 0;
    std::vector<std::size_t> ptr{0};
    std::vector<int> col;
    std::vector<double> val;

    std::size_t nnz() const { return col.size(); }
    void add_row() { ptr.push_back(col.size()); ++n; }
};

Csr transpose(const Csr& a);
// y = A x
void multiply(const Csr& a, const std::vector<double>& x, std::vector<double>& y);
// Submatrix on the listed rows/columns (in the given order).
Csr restrict_to(const Csr& a, const std::vector<int>& keep);

struct PerronResult {
    double lambda = 0;  // midpoint of the final Collatz-Wielandt bounds
    double lo = 0, hi = 0;
    std::vector<double> vec;  // normalized to max entry 1
    int iterations = 0;
    bool converged = false;
    double shift = 0;
};

// Right Perron vector of an irreducible nonnegative matrix by power iteration from all-ones.
// Periodic chains switch to A + sI after a stall.
PerronResult perron_right(const Csr& a, double tol = 1e-13, int max_iter = 100000);

struct Components {
    std::vector<int> comp;  // component id per node, in reverse topological order of discovery
    int count = 0;
    std::vector<char> nontrivial;  // has a cycle
};

Components strongly_connected(const Csr& a);
// Nodes lying on some bi-infinite path (iteratively drop nodes without successors or predecessors).
std::vector<int> essential_nodes(const Csr& a);

}  // namespace tp
