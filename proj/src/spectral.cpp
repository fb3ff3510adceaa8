#include "l2m/spectral.hpp"
#include "l2m/errors.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <random>

namespace l2m {

int EigenBasis::near_zero_count(double rel_tol) const {
    const double scale = std::max(1.0, eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0);
    int c = 0;
    while (c < eigenvalues.size() && eigenvalues[c] <= rel_tol * scale) ++c;
    return c;
}

namespace {

// Fixes each column's sign so the largest-magnitude component (first such
// index on ties) is positive.
void canonicalize_signs(Eigen::MatrixXd& E) {
    for (Eigen::Index c = 0; c < E.cols(); ++c) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index r = 0; r < E.rows(); ++r) {
            const double a = std::abs(E(r, c));
            if (a > best_abs) {
                best_abs = a;
                best = r;
            }
        }
        if (E(best, c) < 0) E.col(c) = -E.col(c);
    }
}

EigenBasis finalize(Eigen::VectorXd lambda, Eigen::MatrixXd E, std::string provenance) {
    for (Eigen::Index i = 0; i < lambda.size(); ++i) lambda[i] = std::max(lambda[i], 0.0);
    canonicalize_signs(E);
    EigenBasis b;
    b.eigenvalues = std::move(lambda);
    b.vectors = std::move(E);
    b.provenance = std::move(provenance);
    return b;
}

EigenBasis dense_path(const SparseSymMatrix& L, Eigen::Index k, const EigOptions& opts) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.dense());
    if (es.info() != Eigen::Success)
        throw NumericalError("dense eigensolver failed");
    return finalize(es.eigenvalues().head(k), es.eigenvectors().leftCols(k), opts.provenance);
}

// Shift-invert Lanczos with full reorthogonalization. The factorized operator
// is (L + tau*I)^-1, whose largest eigenvalues map to the smallest of L.
EigenBasis lanczos_path(const SparseSymMatrix& L, Eigen::Index k, const EigOptions& opts) {
    const Eigen::Index n = L.size();
    double diag_max = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) diag_max = std::max(diag_max, std::abs(L.matrix().coeff(i, i)));
    const double tau = 1e-8 * std::max(1.0, diag_max);

    Eigen::SparseMatrix<double> K = Eigen::SparseMatrix<double>(L.matrix());
    for (Eigen::Index i = 0; i < n; ++i) K.coeffRef(i, i) += tau;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("shift-invert factorization failed");

    const Eigen::Index max_iter = std::min<Eigen::Index>(n, std::max<Eigen::Index>(50 * k, 64));
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::MatrixXd Q(n, max_iter);
    Eigen::VectorXd alpha(max_iter), beta(max_iter);
    auto random_unit_against = [&](Eigen::Index m) {
        Eigen::VectorXd v(n);
        for (int attempt = 0; attempt < 16; ++attempt) {
            for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
            if (m > 0) v -= Q.leftCols(m) * (Q.leftCols(m).transpose() * v);
            const double nrm = v.norm();
            if (nrm > 1e-12) return Eigen::VectorXd(v / nrm);
        }
        throw NumericalError("Lanczos: could not find a new start direction");
    };

    Q.col(0) = random_unit_against(0);
    Eigen::Index m = 0;
    double best_residual = std::numeric_limits<double>::infinity();

    auto extract = [&](Eigen::Index steps, EigenBasis* out) {
        // Ritz pairs of the tridiagonal T
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
        for (Eigen::Index i = 0; i < steps; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < steps) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        // largest theta of K^-1 -> smallest lambda of L, ascending in j
        Eigen::VectorXd lambda(k);
        Eigen::MatrixXd E(n, k);
        for (Eigen::Index j = 0; j < k; ++j) {
            const Eigen::Index src = steps - 1 - j;
            const double theta = es.eigenvalues()[src];
            lambda[j] = theta > 0 ? 1.0 / theta - tau : std::numeric_limits<double>::infinity();
            E.col(j) = Q.leftCols(steps) * es.eigenvectors().col(src);
        }
        double worst = 0.0;
        const double lam_scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
        for (Eigen::Index j = 0; j < k; ++j) {
            E.col(j).normalize();
            worst = std::max(worst, (L * Eigen::VectorXd(E.col(j)) - lambda[j] * E.col(j)).norm() / lam_scale);
        }
        best_residual = std::min(best_residual, worst);
        if (worst <= opts.tol * std::sqrt(static_cast<double>(n))) {
            // re-orthonormalize the Ritz block (Gram-Schmidt; k is modest)
            for (Eigen::Index j = 0; j < k; ++j) {
                for (Eigen::Index p = 0; p < j; ++p) E.col(j) -= E.col(p).dot(E.col(j)) * E.col(p);
                E.col(j).normalize();
            }
            *out = finalize(std::move(lambda), std::move(E), opts.provenance);
            return true;
        }
        return false;
    };

    EigenBasis result;
    while (m < max_iter) {
        Eigen::VectorXd w = ldlt.solve(Q.col(m));
        alpha[m] = Q.col(m).dot(w);
        w -= Q.leftCols(m + 1) * (Q.leftCols(m + 1).transpose() * w); // full reorthogonalization
        w -= Q.leftCols(m + 1) * (Q.leftCols(m + 1).transpose() * w); // second pass
        const double b_m = w.norm();
        ++m;
        if (m >= k && (m == max_iter || m % std::max<Eigen::Index>(k, 8) == 0 || b_m <= 1e-14)) {
            if (extract(m, &result)) return result;
        }
        if (m == max_iter) break;
        if (b_m <= 1e-14) {
            beta[m - 1] = 0.0;
            Q.col(m) = random_unit_against(m); // Krylov space exhausted; restart direction
        } else {
            beta[m - 1] = b_m;
            Q.col(m) = w / b_m;
        }
    }
    throw NumericalError("Lanczos eigensolver missed tolerance " + std::to_string(opts.tol) +
                         " within " + std::to_string(max_iter) +
                         " iterations (best residual " + std::to_string(best_residual) + ")");
}

void check_provenance(const std::string& a, const std::string& b, const char* what) {
    if (a != b)
        throw DataError(std::string(what) + ": provenance mismatch ('" + a + "' vs '" + b + "')");
}

} // namespace

EigenBasis smallest_eigenpairs(const SparseSymMatrix& L, Eigen::Index k, const EigOptions& opts) {
    const Eigen::Index n = L.size();
    if (k < 1 || k > n)
        throw DataError("smallest_eigenpairs: k must be in [1, n], got k=" + std::to_string(k) +
                        " n=" + std::to_string(n));
    switch (opts.solver) {
    case EigSolver::Dense: return dense_path(L, k, opts);
    case EigSolver::Lanczos: return lanczos_path(L, k, opts);
    case EigSolver::Auto: break;
    }
    return n <= 2000 ? dense_path(L, k, opts) : lanczos_path(L, k, opts);
}

EigenBasis prefix_basis(const EigenBasis& basis, Eigen::Index k_prime) {
    if (k_prime < 1 || k_prime > basis.k())
        throw DataError("prefix_basis: k' must be in [1, k], got " + std::to_string(k_prime));
    EigenBasis out;
    out.eigenvalues = basis.eigenvalues.head(k_prime);
    out.vectors = basis.vectors.leftCols(k_prime);
    out.provenance = basis.provenance;
    return out;
}

SpectralTensor project(const EigenBasis& basis, const Eigen::MatrixXd& features) {
    if (features.rows() != basis.n())
        throw DataError("project: feature rows (" + std::to_string(features.rows()) +
                        ") do not match basis size (" + std::to_string(basis.n()) + ")");
    SpectralTensor s;
    s.resolution = basis.k();
    s.data = basis.vectors.transpose() * features;
    s.provenance = basis.provenance;
    return s;
}

Eigen::MatrixXd reconstruct(const EigenBasis& basis, const SpectralTensor& s) {
    check_provenance(basis.provenance, s.provenance, "reconstruct");
    if (s.resolution != basis.k() || s.data.rows() != basis.k())
        throw DataError("reconstruct: tensor resolution " + std::to_string(s.resolution) +
                        " does not match basis k=" + std::to_string(basis.k()));
    return basis.vectors * s.data;
}

SpectralTensor pool_transfer(const EigenBasis& basis_i, const EigenBasis& basis_j,
                             const SpectralTensor& flow) {
    check_provenance(basis_i.provenance, basis_j.provenance, "pool_transfer");
    check_provenance(basis_i.provenance, flow.provenance, "pool_transfer");
    if (flow.resolution != basis_i.k())
        throw DataError("pool_transfer: tensor resolution " + std::to_string(flow.resolution) +
                        " does not match source basis k=" + std::to_string(basis_i.k()));
    SpectralTensor out;
    out.resolution = basis_j.k();
    out.data = (basis_j.vectors.transpose() * basis_i.vectors) * flow.data;
    out.provenance = flow.provenance;
    return out;
}

SpectralTensor unpool_transfer(const EigenBasis& basis_i, const EigenBasis& basis_j,
                               const SpectralTensor& flow) {
    return pool_transfer(basis_j, basis_i, flow);
}

Eigen::Index default_k0(Eigen::Index n) { return std::min<Eigen::Index>(512, n); }

} // namespace l2m
