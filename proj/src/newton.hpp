// newton.hpp - damped Newton with a finite-difference Jacobian (internal).
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>

namespace dam::detail {

struct NewtonResult {
    Eigen::VectorXd x;
    double residual = 0.0;  // max-norm of F(x)
    int iterations = 0;
    bool converged = false;
};

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline Eigen::MatrixXd fd_jacobian(const VectorFn& f, const Eigen::VectorXd& x, double h = 1e-7) {
    const auto n = x.size();
    Eigen::MatrixXd j(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd a = x, b = x;
        a[k] += h;
        b[k] -= h;
        j.col(k) = (f(a) - f(b)) / (2.0 * h);
    }
    return j;
}

// Backtracking on ||F||; `admissible` rejects trial points outside the domain.
inline NewtonResult newton_solve(const VectorFn& f, Eigen::VectorXd x, double tol = 1e-12,
                                 int max_iter = 60,
                                 const std::function<bool(const Eigen::VectorXd&)>& admissible = {}) {
    NewtonResult out;
    Eigen::VectorXd fx = f(x);
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it;
        if (!fx.allFinite()) break;
        if (fx.lpNorm<Eigen::Infinity>() < tol) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd j = fd_jacobian(f, x);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
        if (!lu.isInvertible()) break;
        const Eigen::VectorXd dx = lu.solve(-fx);
        double step = 1.0;
        bool moved = false;
        const double norm0 = fx.norm();
        while (step > 1e-6) {
            const Eigen::VectorXd trial = x + step * dx;
            if (!admissible || admissible(trial)) {
                const Eigen::VectorXd ft = f(trial);
                if (ft.allFinite() && ft.norm() < norm0) {
                    x = trial;
                    fx = ft;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    out.x = x;
    out.residual = fx.allFinite() ? fx.lpNorm<Eigen::Infinity>() : INFINITY;
    if (out.residual < tol) out.converged = true;
    return out;
}

}  // namespace dam::detail
