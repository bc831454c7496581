#include "edgesmdp/simplex.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "edgesmdp/errors.hpp"

namespace edgesmdp {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;
constexpr int kMaxPivots = 200000;
constexpr int kDegenerateRun = 50;

class Tableau {
public:
    Tableau(int rows, int cols) : rows_(rows), cols_(cols), t_(rows, std::vector<double>(cols + 1, 0.0)),
                                  cost_(cols + 1, 0.0), basis_(rows, -1) {}

    std::vector<double>& row(int r) { return t_[r]; }
    double& rhs(int r) { return t_[r][cols_]; }
    std::vector<int>& basis() { return basis_; }
    int rows() const { return rows_; }

    void set_objective(const std::vector<double>& c) {
        // cost_[j] = c_B B^-1 A_j - c_j; cost_[cols_] = current objective value.
        for (int j = 0; j <= cols_; ++j) {
            double v = j < cols_ ? -c[j] : 0.0;
            for (int r = 0; r < rows_; ++r) v += c[basis_[r]] * t_[r][j];
            cost_[j] = v;
        }
    }

    void pivot(int pr, int pc) {
        auto& prow = t_[pr];
        const double inv = 1.0 / prow[pc];
        for (double& v : prow) v *= inv;
        prow[pc] = 1.0;
        for (int r = 0; r < rows_; ++r) {
            if (r == pr) continue;
            const double f = t_[r][pc];
            if (f == 0.0) continue;
            for (int j = 0; j <= cols_; ++j) t_[r][j] -= f * prow[j];
            t_[r][pc] = 0.0;
        }
        const double f = cost_[pc];
        if (f != 0.0) {
            for (int j = 0; j <= cols_; ++j) cost_[j] -= f * prow[j];
            cost_[pc] = 0.0;
        }
        basis_[pr] = pc;
        ++pivots_;
    }

    // Maximizes the current objective over columns [0, allowed). Returns false
    // when unbounded.
    bool optimize(int allowed) {
        bool bland = false;
        int degenerate = 0;
        while (true) {
            if (pivots_ > kMaxPivots) throw SolverFailure("simplex iteration limit reached");
            int enter = -1;
            double best = -kCostTol;
            for (int j = 0; j < allowed; ++j) {
                if (cost_[j] < best) {
                    enter = j;
                    if (bland) break;
                    best = cost_[j];
                }
            }
            if (enter < 0) return true;

            int leave = -1;
            double ratio = std::numeric_limits<double>::infinity();
            for (int r = 0; r < rows_; ++r) {
                const double a = t_[r][enter];
                if (a <= kPivotTol) continue;
                const double q = t_[r][cols_] / a;
                if (q < ratio - 1e-14 || (leave >= 0 && std::abs(q - ratio) <= 1e-14 && basis_[r] < basis_[leave])) {
                    ratio = q;
                    leave = r;
                }
            }
            if (leave < 0) return false;
            degenerate = ratio <= 1e-14 ? degenerate + 1 : 0;
            if (degenerate > kDegenerateRun) bland = true;
            pivot(leave, enter);
        }
    }

    double objective() const { return cost_[cols_]; }
    int pivots() const { return pivots_; }

    void drop_row(int r) {
        t_.erase(t_.begin() + r);
        basis_.erase(basis_.begin() + r);
        --rows_;
    }

private:
    int rows_, cols_;
    std::vector<std::vector<double>> t_;
    std::vector<double> cost_;
    std::vector<int> basis_;
    int pivots_ = 0;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp) {
    const int n = static_cast<int>(lp.c.size());
    const int n_eq = static_cast<int>(lp.A_eq.size());
    const int n_le = static_cast<int>(lp.A_le.size());
    const int R = n_eq + n_le;
    const int n_struct = n + n_le;  // structural + slack columns
    const int cols = n_struct + R;  // + artificials

    // Standard-form rows with b >= 0; sign[r] records flips.
    std::vector<std::vector<double>> A(R, std::vector<double>(n_struct, 0.0));
    std::vector<double> b(R), sign(R, 1.0);
    for (int r = 0; r < R; ++r) {
        const auto& src = r < n_eq ? lp.A_eq[r] : lp.A_le[r - n_eq];
        if (static_cast<int>(src.size()) != n) throw SolverFailure("constraint row has wrong width");
        for (int j = 0; j < n; ++j) A[r][j] = src[j];
        if (r >= n_eq) A[r][n + (r - n_eq)] = 1.0;
        b[r] = r < n_eq ? lp.b_eq[r] : lp.b_le[r - n_eq];
        if (b[r] < 0) {
            sign[r] = -1.0;
            b[r] = -b[r];
            for (double& v : A[r]) v = -v;
        }
    }

    Tableau tab(R, cols);
    for (int r = 0; r < R; ++r) {
        auto& row = tab.row(r);
        for (int j = 0; j < n_struct; ++j) row[j] = A[r][j];
        row[n_struct + r] = 1.0;
        tab.rhs(r) = b[r];
        tab.basis()[r] = n_struct + r;
    }

    std::vector<double> phase1(cols, 0.0);
    for (int r = 0; r < R; ++r) phase1[n_struct + r] = -1.0;
    tab.set_objective(phase1);
    tab.optimize(cols);
    double bnorm = 1.0;
    for (double v : b) bnorm = std::max(bnorm, std::abs(v));
    if (-tab.objective() > 1e-9 * bnorm) throw SolverFailure("linear program is infeasible");

    // Artificials left in the basis sit at zero: pivot them out, or drop the
    // row when it is a combination of the others.
    std::vector<int> kept(R);
    for (int r = 0; r < R; ++r) kept[r] = r;
    for (int r = 0; r < tab.rows();) {
        if (tab.basis()[r] < n_struct) {
            ++r;
            continue;
        }
        int col = -1;
        double best = 1e-9;
        for (int j = 0; j < n_struct; ++j)
            if (std::abs(tab.row(r)[j]) > best) {
                best = std::abs(tab.row(r)[j]);
                col = j;
            }
        if (col >= 0) {
            tab.pivot(r, col);
            ++r;
        } else {
            tab.drop_row(r);
            kept.erase(kept.begin() + r);
        }
    }

    std::vector<double> phase2(cols, 0.0);
    for (int j = 0; j < n; ++j) phase2[j] = lp.c[j];
    tab.set_objective(phase2);
    if (!tab.optimize(n_struct)) throw SolverFailure("linear program is unbounded");

    // Polish: re-solve the final basis directly.
    const int Rk = tab.rows();
    Eigen::MatrixXd Bm(Rk, Rk);
    Eigen::VectorXd bk(Rk), cB(Rk);
    for (int k = 0; k < Rk; ++k) {
        const int col = tab.basis()[k];
        for (int q = 0; q < Rk; ++q) Bm(q, k) = A[kept[q]][col];
        bk(k) = b[kept[k]];
        cB(k) = col < n ? lp.c[col] : 0.0;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Bm);
    if (!lu.isInvertible()) throw SolverFailure("final simplex basis is singular");
    const Eigen::VectorXd xB = lu.solve(bk);
    const Eigen::VectorXd y = Eigen::FullPivLU<Eigen::MatrixXd>(Bm.transpose()).solve(cB);

    LpResult res;
    res.pivots = tab.pivots();
    res.x.assign(n, 0.0);
    for (int k = 0; k < Rk; ++k) {
        const int col = tab.basis()[k];
        if (col < n) res.x[col] = std::max(0.0, xB(k));
    }
    for (int j = 0; j < n; ++j) res.objective += lp.c[j] * res.x[j];
    res.duals_eq.assign(n_eq, 0.0);
    res.duals_le.assign(n_le, 0.0);
    for (int k = 0; k < Rk; ++k) {
        const int r = kept[k];
        const double d = sign[r] * y(k);
        if (r < n_eq)
            res.duals_eq[r] = d;
        else
            res.duals_le[r - n_eq] = d;
    }
    return res;
}

}  // namespace edgesmdp
