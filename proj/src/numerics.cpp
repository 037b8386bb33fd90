#include "sst/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace sst {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw Error("matrix data size does not match shape");
    }
}

Matrix Matrix::row_vector(std::span<const double> values) {
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw Error("matmul_nt: inner dimension mismatch");
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ar = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(ar, b.row(j));
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw Error("matmul: inner dimension mismatch");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto orow = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double v = a(i, k);
            if (v != 0.0) axpy(v, b.row(k), orow);
        }
    }
    return out;
}

void add_matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.rows() != b.rows() || out.rows() != a.cols() || out.cols() != b.cols()) {
        throw Error("add_matmul_tn: shape mismatch");
    }
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto brow = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double v = a(k, i);
            if (v != 0.0) axpy(v, brow, out.row(i));
        }
    }
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

ParamId ParamStore::add(const std::string& name, Matrix value) {
    if (find(name).valid()) throw Error("duplicate parameter '" + name + "'");
    Matrix grad(value.rows(), value.cols());
    entries_.push_back({name, std::move(value), std::move(grad), false});
    return ParamId{entries_.size() - 1};
}

ParamId ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return ParamId{i};
    }
    return {};
}

ParamId ParamStore::id(const std::string& name) const {
    auto pid = find(name);
    if (!pid.valid()) throw Error("unknown parameter '" + name + "'");
    return pid;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& e : entries_) e.grad.fill(0.0);
}

AdamState::AdamState(const ParamStore& store, AdamConfig config) : config_(config) {
    if (!(config.beta1 > 0.0 && config.beta1 < 1.0) || !(config.beta2 > 0.0 && config.beta2 < 1.0)) {
        throw Error("adam: betas must lie in (0, 1)");
    }
    if (!(config.learning_rate > 0.0) || !(config.epsilon > 0.0) || config.weight_decay < 0.0) {
        throw Error("adam: learning rate and epsilon must be positive, weight decay non-negative");
    }
    for (std::size_t i = 0; i < store.count(); ++i) {
        const auto& v = store.value(ParamId{i});
        first_moment_.emplace_back(v.rows(), v.cols());
        second_moment_.emplace_back(v.rows(), v.cols());
    }
}

void AdamState::set_learning_rate(double lr) {
    if (!(lr > 0.0)) throw Error("adam: learning rate must be positive");
    config_.learning_rate = lr;
}

void adam_step(ParamStore& store, AdamState& state) {
    if (state.first_moment_.size() != store.count()) {
        throw Error("adam: state does not match parameter store");
    }
    for (std::size_t i = 0; i < store.count(); ++i) {
        const ParamId pid{i};
        if (!store.grad(pid).all_finite()) {
            throw Error("adam: non-finite gradient in parameter '" + store.name(pid) + "'");
        }
    }

    const auto& cfg = state.config_;
    ++state.step_;
    const double t = static_cast<double>(state.step_);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);

    for (std::size_t i = 0; i < store.count(); ++i) {
        const ParamId pid{i};
        if (store.frozen(pid)) continue;
        auto& w = store.value(pid);
        const auto& g = store.grad(pid);
        auto& m = state.first_moment_[i];
        auto& v = state.second_moment_[i];
        if (!m.same_shape(w)) throw Error("adam: moment shape mismatch for '" + store.name(pid) + "'");
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double mhat = m[k] / bias1;
            const double vhat = v[k] / bias2;
            w[k] -= cfg.learning_rate * (mhat / (std::sqrt(vhat) + cfg.epsilon) + cfg.weight_decay * w[k]);
        }
        if (!w.all_finite()) {
            throw Error("adam: parameter '" + store.name(pid) + "' became non-finite");
        }
    }
    store.bump_step();
}

double finite_diff_check(const std::function<double(const ParamStore&)>& loss,
                         ParamStore& store, double h) {
    if (!(h > 0.0)) throw Error("finite_diff_check: step must be positive");
    double worst = 0.0;
    for (std::size_t i = 0; i < store.count(); ++i) {
        const ParamId pid{i};
        for (std::size_t k = 0; k < store.value(pid).size(); ++k) {
            const double saved = store.value(pid)[k];
            store.value(pid)[k] = saved + h;
            const double up = loss(store);
            store.value(pid)[k] = saved - h;
            const double down = loss(store);
            store.value(pid)[k] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw Error("finite_diff_check: non-finite loss at '" + store.name(pid) + "'");
            }
            const double central = (up - down) / (2.0 * h);
            const double analytic = store.grad(pid)[k];
            const double rel = std::abs(analytic - central) /
                               std::max(1e-12, std::abs(analytic) + std::abs(central));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace sst
