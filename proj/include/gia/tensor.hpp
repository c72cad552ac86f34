#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gia/errors.hpp"

namespace gia {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t numel_of(const Shape& s);

struct TensorData {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad; // empty means absent; sized like data when present
};

// Handle onto shared dense storage (row-major, 64-bit floats). Copying a
// Tensor aliases the same buffer, which is exactly how parameters are shared
// between a layer and the tape that records operations on them.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;
    std::size_t rows() const; // rank-2 (rank-1 counts as a single row)
    std::size_t cols() const;

    bool requires_grad() const;
    void set_requires_grad(bool v);

    std::vector<double>& data();
    const std::vector<double>& data() const;

    bool has_grad() const;
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void ensure_grad(); // allocate zeros if absent
    void zero_grad();   // drop the grad buffer entirely

    double value() const; // scalar convenience; throws ContractError otherwise
    double at(std::size_t r, std::size_t c) const;

    // Fresh storage with the same contents (no longer aliased).
    Tensor clone() const;

    TensorData* raw() const { return d_.get(); }

private:
    explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}
    std::shared_ptr<TensorData> d_;
};

// Records the forward pass as a flat list of nodes. Appending in execution
// order gives a topological order for free; backward() replays the list once
// in reverse, accumulating into .grad of every tensor that requires it.
// A tape and the tensors flowing through it belong to a single owner; do not
// share a recording tape across threads.
class Tape {
public:
    // --- op family ------------------------------------------------------
    Tensor matmul(const Tensor& a, const Tensor& b);    // (m,k)x(k,n)
    Tensor matmul_nt(const Tensor& a, const Tensor& b); // (m,k)x(n,k)^T
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor scale(const Tensor& a, double c);
    Tensor mul_scalar(const Tensor& a, const Tensor& s); // s has numel 1
    Tensor div_scalar(const Tensor& a, const Tensor& s);
    Tensor add_rowvec(const Tensor& x, const Tensor& b); // b broadcast over rows
    Tensor relu(const Tensor& x);
    Tensor softmax(const Tensor& x, std::size_t axis);
    Tensor mean_axis(const Tensor& x, std::size_t axis);
    Tensor sum(const Tensor& x);
    Tensor dot(const Tensor& a, const Tensor& b); // flat inner product
    Tensor mse_loss(const Tensor& pred, const Tensor& target);
    Tensor embed(const Tensor& table, const std::vector<std::size_t>& ids);
    Tensor concat_cols(const std::vector<Tensor>& parts);
    Tensor concat_rows(const std::vector<Tensor>& parts);
    Tensor stack_scalars(const std::vector<Tensor>& scalars);
    Tensor slice_col(const Tensor& x, std::size_t col);
    Tensor take_row(const Tensor& x, std::size_t row);
    Tensor scale_rows(const Tensor& x, const Tensor& w); // w has one entry per row
    Tensor reshape(const Tensor& x, Shape shape);
    Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      double eps = 1e-5);

    // --- control ----------------------------------------------------------
    void backward(const Tensor& loss);
    void clear();
    std::size_t node_count() const { return nodes_.size(); }

    bool grad_enabled() const { return grad_enabled_; }
    void set_grad_enabled(bool v) { grad_enabled_ = v; }

private:
    struct Node {
        std::vector<Tensor> inputs;
        Tensor output;
        std::function<void()> backprop;
    };

    // Appends a node when recording is on and some input needs a gradient.
    Tensor record(Tensor out, std::vector<Tensor> inputs,
                  std::function<void()> backprop);

    std::vector<Node> nodes_;
    bool grad_enabled_ = true;
};

struct NoGradGuard {
    explicit NoGradGuard(Tape& t) : tape(t), prev(t.grad_enabled()) {
        tape.set_grad_enabled(false);
    }
    ~NoGradGuard() { tape.set_grad_enabled(prev); }
    Tape& tape;
    bool prev;
};

struct CheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    bool pass = false;
};

// Compares the tape gradient of a scalar-valued function against central
// finite differences, coordinate by coordinate. `x` is used as live storage:
// f may read it directly or through layers that alias it. Relative error is
// |g - fd| / max(1, |g|, |fd|).
CheckReport grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                       const Tensor& x, double eps, double tol);

} // namespace gia
