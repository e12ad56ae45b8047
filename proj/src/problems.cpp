#include "lorapre/problems.hpp"

#include <algorithm>
#include <cmath>

#include "lorapre/rng.hpp"

namespace lorapre {

namespace {

class QuadraticProblem final : public Problem {
public:
    QuadraticProblem(int p, int q, double condition, std::uint64_t seed)
        : curvature_(p, q), seed_(seed) {
        if (!(condition >= 1.0))
            throw ArgumentError("quadratic_problem: condition must be >= 1");
        // log-spaced curvature field, fixed raster order
        const std::size_t n = curvature_.size();
        double* h = curvature_.data();
        const double log_cond = std::log(condition);
        for (std::size_t i = 0; i < n; ++i) {
            const double frac = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
            h[i] = std::exp(frac * log_cond);
        }
        specs_ = {ParamSpec{"theta", {p, q}}};
    }

    const std::vector<ParamSpec>& param_specs() const override { return specs_; }

    std::vector<Matrix> initial_params() const override {
        Matrix theta(curvature_.rows(), curvature_.cols());
        Rng rng(Rng::derive(seed_, 0x71));
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta.data()[i] = rng.normal(0.0, 1.0);
        return {theta};
    }

    double loss(const std::vector<Matrix>& params) const override {
        const Matrix& theta = params.at(0);
        require_same_shape(theta, curvature_, "quadratic loss");
        double s = 0.0;
        const double* t = theta.data();
        const double* h = curvature_.data();
        for (std::size_t i = 0; i < theta.size(); ++i) s += h[i] * t[i] * t[i];
        return 0.5 * s;
    }

    std::vector<Matrix> grads(const std::vector<Matrix>& params, long) const override {
        return {hadamard(curvature_, params.at(0))};
    }

private:
    Matrix curvature_;
    std::uint64_t seed_;
    std::vector<ParamSpec> specs_;
};

class SensingProblem final : public Problem {
public:
    SensingProblem(int p, int q, int true_rank, double noise_std, std::uint64_t seed)
        : target_(p, q), noise_std_(noise_std), seed_(seed) {
        if (true_rank < 1 || true_rank > std::min(p, q))
            throw ArgumentError("low_rank_sensing_problem: true_rank out of range");
        // M* = U C V^T, factors orthonormalized by modified Gram-Schmidt
        Rng rng(Rng::derive(seed, 0x53));
        Matrix u = random_orthonormal(p, true_rank, rng);
        Matrix v = random_orthonormal(q, true_rank, rng);
        // diagonal weights spread in [1, 2] so every direction matters
        for (int k = 0; k < true_rank; ++k) {
            const double c =
                true_rank == 1 ? 1.5 : 1.0 + static_cast<double>(k) / (true_rank - 1);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < q; ++j) target_(i, j) += c * u(i, k) * v(j, k);
        }
        specs_ = {ParamSpec{"theta", {p, q}}};
    }

    const std::vector<ParamSpec>& param_specs() const override { return specs_; }

    std::vector<Matrix> initial_params() const override {
        return {Matrix(target_.rows(), target_.cols())};
    }

    double loss(const std::vector<Matrix>& params) const override {
        const Matrix diff = add_scaled(1.0, params.at(0), -1.0, target_);
        const double f = frobenius_norm(diff);
        return 0.5 * f * f;
    }

    std::vector<Matrix> grads(const std::vector<Matrix>& params, long step) const override {
        Matrix g = add_scaled(1.0, params.at(0), -1.0, target_);
        if (noise_std_ > 0.0) {
            Rng rng(Rng::derive(seed_, 0x9000 + static_cast<std::uint64_t>(step)));
            for (std::size_t i = 0; i < g.size(); ++i)
                g.data()[i] += rng.normal(0.0, noise_std_);
        }
        return {g};
    }

    const Matrix& target() const { return target_; }

private:
    static Matrix random_orthonormal(int n, int k, Rng& rng) {
        Matrix m(n, k);
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, 1.0);
        // modified Gram-Schmidt, two passes
        for (int j = 0; j < k; ++j) {
            for (int pass = 0; pass < 2; ++pass) {
                for (int prev = 0; prev < j; ++prev) {
                    double dot = 0.0;
                    for (int i = 0; i < n; ++i) dot += m(i, j) * m(i, prev);
                    for (int i = 0; i < n; ++i) m(i, j) -= dot * m(i, prev);
                }
            }
            double nrm = 0.0;
            for (int i = 0; i < n; ++i) nrm += m(i, j) * m(i, j);
            nrm = std::sqrt(nrm);
            if (nrm < 1e-12)
                throw NumericError("low_rank_sensing_problem: degenerate basis draw");
            for (int i = 0; i < n; ++i) m(i, j) /= nrm;
        }
        return m;
    }

    Matrix target_;
    double noise_std_;
    std::uint64_t seed_;
    std::vector<ParamSpec> specs_;
};

MlpData build_mlp_data(int input_dim, int classes, int n_samples, std::uint64_t seed) {
    if (input_dim > 256 || classes > 256)
        throw ArgumentError("tiny_mlp_problem: dims must be <= 256");
    if (classes < 2) throw ArgumentError("tiny_mlp_problem: need >= 2 classes");
    // Gaussian blobs: one seeded center per class, labels round-robin.
    MlpData data{Matrix(n_samples, input_dim), std::vector<int>(n_samples)};
    Rng rng(Rng::derive(seed, 0x317));
    std::vector<std::vector<double>> centers(classes, std::vector<double>(input_dim));
    for (auto& ctr : centers)
        for (auto& x : ctr) x = rng.normal(0.0, 2.0);
    for (int i = 0; i < n_samples; ++i) {
        data.labels[static_cast<std::size_t>(i)] = i % classes;
        for (int j = 0; j < input_dim; ++j)
            data.x(i, j) = centers[data.labels[static_cast<std::size_t>(i)]][j] +
                           rng.normal(0.0, 0.5);
    }
    return data;
}

class TinyMlpProblem final : public Problem {
public:
    TinyMlpProblem(int input_dim, int hidden_dim, int classes, int n_samples,
                   std::uint64_t seed)
        : d_(input_dim), h_(hidden_dim), c_(classes), n_(n_samples),
          x_(1, 1), labels_(), seed_(seed) {
        if (hidden_dim > 256) throw ArgumentError("tiny_mlp_problem: dims must be <= 256");
        MlpData data = build_mlp_data(input_dim, classes, n_samples, seed);
        x_ = std::move(data.x);
        labels_ = std::move(data.labels);
        specs_ = {ParamSpec{"w1", {input_dim, hidden_dim}},
                  ParamSpec{"w2", {hidden_dim, classes}}};
    }

    const std::vector<ParamSpec>& param_specs() const override { return specs_; }

    std::vector<Matrix> initial_params() const override {
        Rng rng(Rng::derive(seed_, 0x318));
        Matrix w1(d_, h_), w2(h_, c_);
        const double s1 = 1.0 / std::sqrt(static_cast<double>(d_));
        const double s2 = 1.0 / std::sqrt(static_cast<double>(h_));
        for (std::size_t i = 0; i < w1.size(); ++i) w1.data()[i] = rng.normal(0.0, s1);
        for (std::size_t i = 0; i < w2.size(); ++i) w2.data()[i] = rng.normal(0.0, s2);
        return {w1, w2};
    }

    double loss(const std::vector<Matrix>& params) const override {
        Matrix probs(n_, c_);
        forward(params, nullptr, &probs);
        double total = 0.0;
        for (int i = 0; i < n_; ++i)
            total -= std::log(std::max(probs(i, labels_[i]), 1e-300));
        return total / n_;
    }

    std::vector<Matrix> grads(const std::vector<Matrix>& params, long) const override {
        Matrix hidden(n_, h_), probs(n_, c_);
        forward(params, &hidden, &probs);
        const Matrix& w2 = params.at(1);
        // dZ = (P - Y)/n; gW2 = H^T dZ; dH = dZ W2^T; dU = dH o (1 - H o H)
        Matrix dz = probs;
        for (int i = 0; i < n_; ++i) dz(i, labels_[i]) -= 1.0;
        for (std::size_t i = 0; i < dz.size(); ++i) dz.data()[i] /= n_;
        Matrix g_w2 = matmul(transpose(hidden), dz);
        Matrix dh = matmul(dz, transpose(w2));
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < h_; ++j)
                dh(i, j) *= 1.0 - hidden(i, j) * hidden(i, j);
        Matrix g_w1 = matmul(transpose(x_), dh);
        return {std::move(g_w1), std::move(g_w2)};
    }

private:
    void forward(const std::vector<Matrix>& params, Matrix* hidden_out,
                 Matrix* probs_out) const {
        const Matrix& w1 = params.at(0);
        const Matrix& w2 = params.at(1);
        Matrix hidden = matmul(x_, w1);
        for (std::size_t i = 0; i < hidden.size(); ++i)
            hidden.data()[i] = std::tanh(hidden.data()[i]);
        Matrix logits = matmul(hidden, w2);
        Matrix probs(n_, c_);
        for (int i = 0; i < n_; ++i) {
            double row_max = logits(i, 0);
            for (int j = 1; j < c_; ++j) row_max = std::max(row_max, logits(i, j));
            double denom = 0.0;
            for (int j = 0; j < c_; ++j) denom += std::exp(logits(i, j) - row_max);
            for (int j = 0; j < c_; ++j)
                probs(i, j) = std::exp(logits(i, j) - row_max) / denom;
        }
        if (hidden_out) *hidden_out = std::move(hidden);
        if (probs_out) *probs_out = std::move(probs);
    }

    int d_, h_, c_, n_;
    Matrix x_;
    std::vector<int> labels_;
    std::uint64_t seed_;
    std::vector<ParamSpec> specs_;
};

} // namespace

std::unique_ptr<Problem> quadratic_problem(int p, int q, double condition,
                                           std::uint64_t seed) {
    return std::make_unique<QuadraticProblem>(p, q, condition, seed);
}

std::unique_ptr<Problem> low_rank_sensing_problem(int p, int q, int true_rank,
                                                  double noise_std, std::uint64_t seed) {
    return std::make_unique<SensingProblem>(p, q, true_rank, noise_std, seed);
}

std::unique_ptr<Problem> tiny_mlp_problem(int input_dim, int hidden_dim, int classes,
                                          int n_samples, std::uint64_t seed) {
    return std::make_unique<TinyMlpProblem>(input_dim, hidden_dim, classes, n_samples,
                                            seed);
}

MlpData tiny_mlp_dataset(int input_dim, int classes, int n_samples, std::uint64_t seed) {
    return build_mlp_data(input_dim, classes, n_samples, seed);
}

double gradient_self_check(const Problem& problem, int n_points, std::uint64_t seed) {
    const double h = 1e-6;
    double worst = 0.0;
    Rng rng(Rng::derive(seed, 0xFD));
    for (int pt = 0; pt < n_points; ++pt) {
        std::vector<Matrix> params = problem.initial_params();
        for (auto& p : params)
            for (std::size_t i = 0; i < p.size(); ++i)
                p.data()[i] += rng.normal(0.0, 0.3);
        const std::vector<Matrix> analytic = problem.grads(params, 0);
        // relative error of the probed gradient vector, per point
        double diff_sq = 0.0, ref_sq = 0.0;
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            const std::size_t n = params[pi].size();
            const int probes = static_cast<int>(std::min<std::size_t>(n, 6));
            for (int probe = 0; probe < probes; ++probe) {
                const std::size_t idx = rng.next_u64() % n;
                std::vector<Matrix> plus = params, minus = params;
                plus[pi].data()[idx] += h;
                minus[pi].data()[idx] -= h;
                const double fd =
                    (problem.loss(plus) - problem.loss(minus)) / (2.0 * h);
                const double an = analytic[pi].data()[idx];
                diff_sq += (fd - an) * (fd - an);
                ref_sq += an * an;
            }
        }
        worst = std::max(worst, std::sqrt(diff_sq) / std::max(std::sqrt(ref_sq), 1e-12));
    }
    return worst;
}

} // namespace lorapre
