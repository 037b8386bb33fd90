#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sst {

// Thrown for contract violations anywhere in the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense row-major f64 matrix. Vectors are stored as 1 x n.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix row_vector(std::span<const double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double value);
    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
// out += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> out);

// out = a * b^T   (a: n x k, b: m x k, out: n x m)
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// out = a * b     (a: n x k, b: k x m)
Matrix matmul(const Matrix& a, const Matrix& b);
// out += a^T * b  (a: k x n, b: k x m, out: n x m)
void add_matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);

double sigmoid(double x);

// Scores are kept inside [kScoreEps, 1 - kScoreEps] before any log.
inline constexpr double kScoreEps = 1e-7;

struct ParamId {
    std::size_t index = static_cast<std::size_t>(-1);
    bool valid() const { return index != static_cast<std::size_t>(-1); }
    bool operator==(const ParamId&) const = default;
};

// Named parameter tensors, each paired with a same-shape gradient accumulator.
class ParamStore {
public:
    ParamId add(const std::string& name, Matrix value);

    ParamId find(const std::string& name) const;
    ParamId id(const std::string& name) const;  // throws if missing

    Matrix& value(ParamId id) { return entries_.at(id.index).value; }
    const Matrix& value(ParamId id) const { return entries_.at(id.index).value; }
    Matrix& grad(ParamId id) { return entries_.at(id.index).grad; }
    const Matrix& grad(ParamId id) const { return entries_.at(id.index).grad; }

    const std::string& name(ParamId id) const { return entries_.at(id.index).name; }
    std::size_t count() const { return entries_.size(); }
    std::size_t scalar_count() const;

    // Frozen parameters are skipped by the optimizer.
    void set_frozen(ParamId id, bool frozen) { entries_.at(id.index).frozen = frozen; }
    bool frozen(ParamId id) const { return entries_.at(id.index).frozen; }

    void zero_grads();
    std::uint64_t steps() const { return steps_; }
    void bump_step() { ++steps_; }

    friend bool operator==(const ParamStore&, const ParamStore&) = default;

private:
    struct Entry {
        std::string name;
        Matrix value;
        Matrix grad;
        bool frozen = false;
        friend bool operator==(const Entry&, const Entry&) = default;
    };
    std::vector<Entry> entries_;
    std::uint64_t steps_ = 0;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 5e-4;
};

class AdamState {
public:
    AdamState() = default;
    AdamState(const ParamStore& store, AdamConfig config);

    const AdamConfig& config() const { return config_; }
    void set_learning_rate(double lr);
    std::uint64_t step() const { return step_; }

private:
    friend void adam_step(ParamStore& store, AdamState& state);
    AdamConfig config_;
    std::vector<Matrix> first_moment_;
    std::vector<Matrix> second_moment_;
    std::uint64_t step_ = 0;
};

// One Adam update with decoupled weight decay. Gradients are left as-is.
void adam_step(ParamStore& store, AdamState& state);

// Compares the gradients already accumulated in `store` against central
// differences of `loss`. Returns the maximum relative error over every
// scalar parameter. `store` is restored before returning.
double finite_diff_check(const std::function<double(const ParamStore&)>& loss,
                         ParamStore& store, double h = 1e-5);

}  // namespace sst
