#include "gia/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gia/kernels.hpp"

namespace gia {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

std::size_t numel_of(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
}

namespace {

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) {
        throw ContractError(std::string(op) + ": undefined tensor");
    }
    if (t.numel() == 0) {
        throw DomainError(std::string(op) + ": empty tensor");
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " +
                             shape_str(t.shape()));
    }
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

} // namespace

// --- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->data.assign(numel_of(d->shape), value);
    d->requires_grad = requires_grad;
    return Tensor(std::move(d));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    if (numel_of(shape) != data.size()) {
        throw DimensionError("from_data: shape " + shape_str(shape) + " needs " +
                             std::to_string(numel_of(shape)) + " values, got " +
                             std::to_string(data.size()));
    }
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->data = std::move(data);
    d->requires_grad = requires_grad;
    return Tensor(std::move(d));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
    if (!d_) throw ContractError("shape(): undefined tensor");
    return d_->shape;
}

std::size_t Tensor::numel() const { return d_ ? d_->data.size() : 0; }

std::size_t Tensor::rows() const {
    const Shape& s = shape();
    return s.size() == 2 ? s[0] : 1;
}

std::size_t Tensor::cols() const {
    const Shape& s = shape();
    return s.size() == 2 ? s[1] : s[0];
}

bool Tensor::requires_grad() const { return d_ && d_->requires_grad; }

void Tensor::set_requires_grad(bool v) {
    if (!d_) throw ContractError("set_requires_grad on undefined tensor");
    d_->requires_grad = v;
}

std::vector<double>& Tensor::data() {
    if (!d_) throw ContractError("data(): undefined tensor");
    return d_->data;
}

const std::vector<double>& Tensor::data() const {
    if (!d_) throw ContractError("data(): undefined tensor");
    return d_->data;
}

bool Tensor::has_grad() const { return d_ && !d_->grad.empty(); }

std::vector<double>& Tensor::grad() {
    if (!has_grad()) throw ContractError("grad(): no gradient present");
    return d_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (!has_grad()) throw ContractError("grad(): no gradient present");
    return d_->grad;
}

void Tensor::ensure_grad() {
    if (!d_) throw ContractError("ensure_grad on undefined tensor");
    if (d_->grad.empty()) d_->grad.assign(d_->data.size(), 0.0);
}

void Tensor::zero_grad() {
    if (d_) d_->grad.clear();
}

double Tensor::value() const {
    if (numel() != 1) {
        throw ContractError("value(): tensor has " + std::to_string(numel()) +
                            " elements, expected 1");
    }
    return d_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    return data()[r * cols() + c];
}

Tensor Tensor::clone() const {
    if (!d_) return Tensor();
    return from_data(d_->shape, d_->data, d_->requires_grad);
}

// --- Tape -------------------------------------------------------------------

Tensor Tape::record(Tensor out, std::vector<Tensor> inputs,
                    std::function<void()> backprop) {
    bool need = false;
    if (grad_enabled_) {
        for (const Tensor& t : inputs) {
            if (t.requires_grad()) {
                need = true;
                break;
            }
        }
    }
    if (need) {
        out.set_requires_grad(true);
        nodes_.push_back(Node{std::move(inputs), out, std::move(backprop)});
    }
    return out;
}

void Tape::clear() { nodes_.clear(); }

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ContractError("backward: loss must be a scalar tensor");
    }
    if (!loss.requires_grad()) {
        return; // nothing upstream wants a gradient
    }
    loss.raw()->grad.assign(1, 0.0);
    loss.raw()->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->output.has_grad() && it->backprop) {
            it->backprop();
        }
    }
}

// Accumulation helper: make sure the grad buffer exists before adding.
// Takes a const handle because lambda captures of const refs stay const;
// the underlying storage is shared either way.
static std::vector<double>& acc(const Tensor& t) {
    TensorData* d = t.raw();
    if (d->grad.empty()) d->grad.assign(d->data.size(), 0.0);
    return d->grad;
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions differ, " +
                             shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    kernels::gemm_nn(a.data().data(), b.data().data(), out.data().data(), m, k, n);
    return record(out, {a, b}, [a, b, out, m, k, n]() mutable {
        const double* g = out.grad().data();
        if (a.requires_grad()) {
            // dA += dC * B^T
            kernels::gemm_nt(g, b.data().data(), acc(a).data(), m, n, k);
        }
        if (b.requires_grad()) {
            // dB += A^T * dC
            kernels::gemm_tn(a.data().data(), g, acc(b).data(), k, m, n);
        }
    });
}

Tensor Tape::matmul_nt(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul_nt");
    require_defined(b, "matmul_nt");
    require_rank2(a, "matmul_nt");
    require_rank2(b, "matmul_nt");
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: inner dimensions differ, " +
                             shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor out = Tensor::zeros({m, n});
    kernels::gemm_nt(a.data().data(), b.data().data(), out.data().data(), m, k, n);
    return record(out, {a, b}, [a, b, out, m, k, n]() mutable {
        const double* g = out.grad().data();
        if (a.requires_grad()) {
            // dA += dC * B
            kernels::gemm_nn(g, b.data().data(), acc(a).data(), m, n, k);
        }
        if (b.requires_grad()) {
            // dB += dC^T * A
            kernels::gemm_tn(g, a.data().data(), acc(b).data(), n, m, k);
        }
    });
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    require_defined(a, "add");
    require_defined(b, "add");
    require_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return record(out, {a, b}, [a, b, out, n]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
            auto& ga = acc(a);
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
            auto& gb = acc(b);
            for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
        }
    });
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    require_defined(a, "mul");
    require_defined(b, "mul");
    require_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return record(out, {a, b}, [a, b, out, n]() mutable {
        const auto& g = out.grad();
        if (a.requires_grad()) {
            auto& ga = acc(a);
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * b.data()[i];
        }
        if (b.requires_grad()) {
            auto& gb = acc(b);
            for (std::size_t i = 0; i < n; ++i) gb[i] += g[i] * a.data()[i];
        }
    });
}

Tensor Tape::scale(const Tensor& a, double c) {
    require_defined(a, "scale");
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * c;
    return record(out, {a}, [a, out, c, n]() mutable {
        if (!a.requires_grad()) return;
        const auto& g = out.grad();
        auto& ga = acc(a);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * c;
    });
}

Tensor Tape::mul_scalar(const Tensor& a, const Tensor& s) {
    require_defined(a, "mul_scalar");
    require_defined(s, "mul_scalar");
    if (s.numel() != 1) {
        throw DimensionError("mul_scalar: scale factor must have one element, got " +
                             shape_str(s.shape()));
    }
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    const double sv = s.data()[0];
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * sv;
    return record(out, {a, s}, [a, s, out, n]() mutable {
        const auto& g = out.grad();
        const double sv = s.data()[0];
        if (a.requires_grad()) {
            auto& ga = acc(a);
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * sv;
        }
        if (s.requires_grad()) {
            double gs = 0.0;
            for (std::size_t i = 0; i < n; ++i) gs += g[i] * a.data()[i];
            acc(s)[0] += gs;
        }
    });
}

Tensor Tape::div_scalar(const Tensor& a, const Tensor& s) {
    require_defined(a, "div_scalar");
    require_defined(s, "div_scalar");
    if (s.numel() != 1) {
        throw DimensionError("div_scalar: divisor must have one element, got " +
                             shape_str(s.shape()));
    }
    const double sv = s.data()[0];
    if (sv == 0.0) throw DomainError("div_scalar: division by zero");
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] / sv;
    return record(out, {a, s}, [a, s, out, n]() mutable {
        const auto& g = out.grad();
        const double sv = s.data()[0];
        if (a.requires_grad()) {
            auto& ga = acc(a);
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] / sv;
        }
        if (s.requires_grad()) {
            double gs = 0.0;
            for (std::size_t i = 0; i < n; ++i) gs -= g[i] * a.data()[i] / (sv * sv);
            acc(s)[0] += gs;
        }
    });
}

Tensor Tape::add_rowvec(const Tensor& x, const Tensor& b) {
    require_defined(x, "add_rowvec");
    require_defined(b, "add_rowvec");
    if (b.numel() != x.cols()) {
        throw DimensionError("add_rowvec: vector " + shape_str(b.shape()) +
                             " does not match row width of " + shape_str(x.shape()));
    }
    const std::size_t r = x.rows(), c = x.cols();
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out.data()[i * c + j] = x.data()[i * c + j] + b.data()[j];
        }
    }
    return record(out, {x, b}, [x, b, out, r, c]() mutable {
        const auto& g = out.grad();
        if (x.requires_grad()) {
            auto& gx = acc(x);
            for (std::size_t i = 0; i < r * c; ++i) gx[i] += g[i];
        }
        if (b.requires_grad()) {
            auto& gb = acc(b);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
            }
        }
    });
}

Tensor Tape::relu(const Tensor& x) {
    require_defined(x, "relu");
    Tensor out = Tensor::zeros(x.shape());
    const std::size_t n = x.numel();
    for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::max(0.0, x.data()[i]);
    return record(out, {x}, [x, out, n]() mutable {
        if (!x.requires_grad()) return;
        const auto& g = out.grad();
        auto& gx = acc(x);
        for (std::size_t i = 0; i < n; ++i) {
            if (x.data()[i] > 0.0) gx[i] += g[i];
        }
    });
}

Tensor Tape::softmax(const Tensor& x, std::size_t axis) {
    require_defined(x, "softmax");
    if (axis >= x.rank()) {
        throw DimensionError("softmax: axis " + std::to_string(axis) +
                             " out of range for " + shape_str(x.shape()));
    }
    if (!all_finite(x.data())) {
        throw NumericError("softmax: input contains NaN/Inf");
    }
    if (x.rank() > 2) {
        throw DimensionError("softmax: rank > 2 unsupported");
    }
    // Treat rank-1 as a single lane; rank-2 axis 1 normalizes rows, axis 0
    // normalizes columns.
    const bool row_lanes = (x.rank() == 1) || (axis == 1);
    const std::size_t lanes = row_lanes ? x.rows() : x.cols();
    const std::size_t width = row_lanes ? x.cols() : x.rows();
    const std::size_t lane_stride = row_lanes ? x.cols() : 1;
    const std::size_t elem_stride = row_lanes ? 1 : x.cols();

    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t l = 0; l < lanes; ++l) {
        const double* xin = x.data().data() + l * lane_stride;
        double* y = out.data().data() + l * lane_stride;
        double mx = xin[0];
        for (std::size_t i = 1; i < width; ++i) mx = std::max(mx, xin[i * elem_stride]);
        double denom = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            const double e = std::exp(xin[i * elem_stride] - mx);
            y[i * elem_stride] = e;
            denom += e;
        }
        for (std::size_t i = 0; i < width; ++i) y[i * elem_stride] /= denom;
    }
    return record(out, {x}, [x, out, lanes, width, lane_stride, elem_stride]() mutable {
        if (!x.requires_grad()) return;
        const auto& g = out.grad();
        auto& gx = acc(x);
        for (std::size_t l = 0; l < lanes; ++l) {
            const double* y = out.data().data() + l * lane_stride;
            const double* gy = g.data() + l * lane_stride;
            double dotv = 0.0;
            for (std::size_t i = 0; i < width; ++i) {
                dotv += gy[i * elem_stride] * y[i * elem_stride];
            }
            for (std::size_t i = 0; i < width; ++i) {
                gx[l * lane_stride + i * elem_stride] +=
                    y[i * elem_stride] * (gy[i * elem_stride] - dotv);
            }
        }
    });
}

Tensor Tape::mean_axis(const Tensor& x, std::size_t axis) {
    require_defined(x, "mean_axis");
    if (axis >= x.rank()) {
        throw DimensionError("mean_axis: axis " + std::to_string(axis) +
                             " out of range for " + shape_str(x.shape()));
    }
    if (x.rank() == 1) {
        Tensor out = Tensor::scalar(0.0);
        const std::size_t n = x.numel();
        double s = 0.0;
        for (double v : x.data()) s += v;
        out.data()[0] = s / static_cast<double>(n);
        return record(out, {x}, [x, out, n]() mutable {
            if (!x.requires_grad()) return;
            const double g = out.grad()[0] / static_cast<double>(n);
            auto& gx = acc(x);
            for (std::size_t i = 0; i < n; ++i) gx[i] += g;
        });
    }
    require_rank2(x, "mean_axis");
    const std::size_t r = x.rows(), c = x.cols();
    if (axis == 0) {
        Tensor out = Tensor::zeros({c});
        for (std::size_t j = 0; j < c; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < r; ++i) s += x.data()[i * c + j];
            out.data()[j] = s / static_cast<double>(r);
        }
        return record(out, {x}, [x, out, r, c]() mutable {
            if (!x.requires_grad()) return;
            const auto& g = out.grad();
            auto& gx = acc(x);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    gx[i * c + j] += g[j] / static_cast<double>(r);
                }
            }
        });
    }
    Tensor out = Tensor::zeros({r});
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += x.data()[i * c + j];
        out.data()[i] = s / static_cast<double>(c);
    }
    return record(out, {x}, [x, out, r, c]() mutable {
        if (!x.requires_grad()) return;
        const auto& g = out.grad();
        auto& gx = acc(x);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                gx[i * c + j] += g[i] / static_cast<double>(c);
            }
        }
    });
}

Tensor Tape::sum(const Tensor& x) {
    require_defined(x, "sum");
    Tensor out = Tensor::scalar(0.0);
    double s = 0.0;
    for (double v : x.data()) s += v;
    out.data()[0] = s;
    const std::size_t n = x.numel();
    return record(out, {x}, [x, out, n]() mutable {
        if (!x.requires_grad()) return;
        const double g = out.grad()[0];
        auto& gx = acc(x);
        for (std::size_t i = 0; i < n; ++i) gx[i] += g;
    });
}

Tensor Tape::dot(const Tensor& a, const Tensor& b) {
    require_defined(a, "dot");
    require_defined(b, "dot");
    if (a.numel() != b.numel()) {
        throw DimensionError("dot: element counts differ, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    const std::size_t n = a.numel();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a.data()[i] * b.data()[i];
    Tensor out = Tensor::scalar(s);
    return record(out, {a, b}, [a, b, out, n]() mutable {
        const double g = out.grad()[0];
        if (a.requires_grad()) {
            auto& ga = acc(a);
            for (std::size_t i = 0; i < n; ++i) ga[i] += g * b.data()[i];
        }
        if (b.requires_grad()) {
            auto& gb = acc(b);
            for (std::size_t i = 0; i < n; ++i) gb[i] += g * a.data()[i];
        }
    });
}

Tensor Tape::mse_loss(const Tensor& pred, const Tensor& target) {
    require_defined(pred, "mse_loss");
    require_defined(target, "mse_loss");
    require_same_shape(pred, target, "mse_loss");
    const std::size_t n = pred.numel();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pred.data()[i] - target.data()[i];
        s += d * d;
    }
    Tensor out = Tensor::scalar(s / static_cast<double>(n));
    return record(out, {pred, target}, [pred, target, out, n]() mutable {
        const double g = out.grad()[0] * 2.0 / static_cast<double>(n);
        if (pred.requires_grad()) {
            auto& gp = acc(pred);
            for (std::size_t i = 0; i < n; ++i) {
                gp[i] += g * (pred.data()[i] - target.data()[i]);
            }
        }
        if (target.requires_grad()) {
            auto& gt = acc(target);
            for (std::size_t i = 0; i < n; ++i) {
                gt[i] -= g * (pred.data()[i] - target.data()[i]);
            }
        }
    });
}

Tensor Tape::embed(const Tensor& table, const std::vector<std::size_t>& ids) {
    require_defined(table, "embed");
    require_rank2(table, "embed");
    if (ids.empty()) throw DomainError("embed: empty id list");
    const std::size_t vocab = table.rows(), d = table.cols();
    for (std::size_t id : ids) {
        if (id >= vocab) {
            throw InputError("embed: id " + std::to_string(id) +
                             " out of range for table with " + std::to_string(vocab) +
                             " rows");
        }
    }
    Tensor out = Tensor::zeros({ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::copy_n(table.data().data() + ids[i] * d, d, out.data().data() + i * d);
    }
    return record(out, {table}, [table, out, ids, d]() mutable {
        if (!table.requires_grad()) return;
        const auto& g = out.grad();
        auto& gt = acc(table);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                gt[ids[i] * d + j] += g[i * d + j];
            }
        }
    });
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DomainError("concat_cols: no parts");
    const std::size_t r = parts[0].rows();
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        require_defined(p, "concat_cols");
        require_rank2(p, "concat_cols");
        if (p.rows() != r) {
            throw DimensionError("concat_cols: row counts differ, " +
                                 shape_str(parts[0].shape()) + " vs " +
                                 shape_str(p.shape()));
        }
        total += p.cols();
    }
    Tensor out = Tensor::zeros({r, total});
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        const std::size_t c = p.cols();
        for (std::size_t i = 0; i < r; ++i) {
            std::copy_n(p.data().data() + i * c, c,
                        out.data().data() + i * total + off);
        }
        off += c;
    }
    return record(out, parts, [parts, out, r, total]() mutable {
        const auto& g = out.grad();
        std::size_t off = 0;
        for (const Tensor& p : parts) {
            const std::size_t c = p.cols();
            if (p.requires_grad()) {
                auto& gp = acc(p);
                for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < c; ++j) {
                        gp[i * c + j] += g[i * total + off + j];
                    }
                }
            }
            off += c;
        }
    });
}

Tensor Tape::concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DomainError("concat_rows: no parts");
    const std::size_t c = parts[0].cols();
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        require_defined(p, "concat_rows");
        if (p.cols() != c) {
            throw DimensionError("concat_rows: widths differ, " +
                                 shape_str(parts[0].shape()) + " vs " +
                                 shape_str(p.shape()));
        }
        total += p.rows();
    }
    Tensor out = Tensor::zeros({total, c});
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        std::copy_n(p.data().data(), p.numel(), out.data().data() + off * c);
        off += p.rows();
    }
    return record(out, parts, [parts, out, c]() mutable {
        const auto& g = out.grad();
        std::size_t off = 0;
        for (const Tensor& p : parts) {
            if (p.requires_grad()) {
                auto& gp = acc(p);
                for (std::size_t i = 0; i < p.numel(); ++i) {
                    gp[i] += g[off * c + i];
                }
            }
            off += p.rows();
        }
    });
}

Tensor Tape::stack_scalars(const std::vector<Tensor>& scalars) {
    if (scalars.empty()) throw DomainError("stack_scalars: no inputs");
    Tensor out = Tensor::zeros({scalars.size()});
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        if (scalars[i].numel() != 1) {
            throw DimensionError("stack_scalars: entry " + std::to_string(i) +
                                 " has shape " + shape_str(scalars[i].shape()));
        }
        out.data()[i] = scalars[i].data()[0];
    }
    return record(out, scalars, [scalars, out]() mutable {
        const auto& g = out.grad();
        for (std::size_t i = 0; i < scalars.size(); ++i) {
            Tensor s = scalars[i];
            if (s.requires_grad()) acc(s)[0] += g[i];
        }
    });
}

Tensor Tape::slice_col(const Tensor& x, std::size_t col) {
    require_defined(x, "slice_col");
    require_rank2(x, "slice_col");
    if (col >= x.cols()) {
        throw DimensionError("slice_col: column " + std::to_string(col) +
                             " out of range for " + shape_str(x.shape()));
    }
    const std::size_t r = x.rows(), c = x.cols();
    Tensor out = Tensor::zeros({r});
    for (std::size_t i = 0; i < r; ++i) out.data()[i] = x.data()[i * c + col];
    return record(out, {x}, [x, out, col, r, c]() mutable {
        if (!x.requires_grad()) return;
        const auto& g = out.grad();
        auto& gx = acc(x);
        for (std::size_t i = 0; i < r; ++i) gx[i * c + col] += g[i];
    });
}

Tensor Tape::take_row(const Tensor& x, std::size_t row) {
    require_defined(x, "take_row");
    require_rank2(x, "take_row");
    if (row >= x.rows()) {
        throw DimensionError("take_row: row " + std::to_string(row) +
                             " out of range for " + shape_str(x.shape()));
    }
    const std::size_t c = x.cols();
    Tensor out = Tensor::zeros({c});
    std::copy_n(x.data().data() + row * c, c, out.data().data());
    return record(out, {x}, [x, out, row, c]() mutable {
        if (!x.requires_grad()) return;
        const auto& g = out.grad();
        auto& gx = acc(x);
        for (std::size_t j = 0; j < c; ++j) gx[row * c + j] += g[j];
    });
}

Tensor Tape::scale_rows(const Tensor& x, const Tensor& w) {
    require_defined(x, "scale_rows");
    require_defined(w, "scale_rows");
    require_rank2(x, "scale_rows");
    if (w.numel() != x.rows()) {
        throw DimensionError("scale_rows: weight " + shape_str(w.shape()) +
                             " does not match rows of " + shape_str(x.shape()));
    }
    const std::size_t r = x.rows(), c = x.cols();
    Tensor out = Tensor::zeros(x.shape());
    for (std::size_t i = 0; i < r; ++i) {
        const double wi = w.data()[i];
        for (std::size_t j = 0; j < c; ++j) {
            out.data()[i * c + j] = wi * x.data()[i * c + j];
        }
    }
    return record(out, {x, w}, [x, w, out, r, c]() mutable {
        const auto& g = out.grad();
        if (x.requires_grad()) {
            auto& gx = acc(x);
            for (std::size_t i = 0; i < r; ++i) {
                const double wi = w.data()[i];
                for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += wi * g[i * c + j];
            }
        }
        if (w.requires_grad()) {
            auto& gw = acc(w);
            for (std::size_t i = 0; i < r; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    s += g[i * c + j] * x.data()[i * c + j];
                }
                gw[i] += s;
            }
        }
    });
}

Tensor Tape::reshape(const Tensor& x, Shape shape) {
    require_defined(x, "reshape");
    if (numel_of(shape) != x.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) +
                             " as " + shape_str(shape));
    }
    Tensor out = Tensor::from_data(std::move(shape), x.data());
    const std::size_t n = x.numel();
    return record(out, {x}, [x, out, n]() mutable {
        if (!x.requires_grad()) return;
        const auto& g = out.grad();
        auto& gx = acc(x);
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i];
    });
}

Tensor Tape::layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                        double eps) {
    require_defined(x, "layer_norm");
    require_defined(gamma, "layer_norm");
    require_defined(beta, "layer_norm");
    require_rank2(x, "layer_norm");
    const std::size_t r = x.rows(), c = x.cols();
    if (gamma.numel() != c || beta.numel() != c) {
        throw DimensionError("layer_norm: scale/shift " + shape_str(gamma.shape()) +
                             "/" + shape_str(beta.shape()) + " do not match width of " +
                             shape_str(x.shape()));
    }
    Tensor out = Tensor::zeros(x.shape());
    auto xhat = std::make_shared<std::vector<double>>(r * c);
    auto inv_std = std::make_shared<std::vector<double>>(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double* xi = x.data().data() + i * c;
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += xi[j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = xi[j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (std::size_t j = 0; j < c; ++j) {
            const double xh = (xi[j] - mu) * is;
            (*xhat)[i * c + j] = xh;
            out.data()[i * c + j] = gamma.data()[j] * xh + beta.data()[j];
        }
    }
    return record(out, {x, gamma, beta},
                  [x, gamma, beta, out, xhat, inv_std, r, c]() mutable {
        const auto& g = out.grad();
        if (gamma.requires_grad()) {
            auto& gg = acc(gamma);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    gg[j] += g[i * c + j] * (*xhat)[i * c + j];
                }
            }
        }
        if (beta.requires_grad()) {
            auto& gb = acc(beta);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
            }
        }
        if (x.requires_grad()) {
            auto& gx = acc(x);
            for (std::size_t i = 0; i < r; ++i) {
                double m1 = 0.0, m2 = 0.0; // mean(dxhat), mean(dxhat*xhat)
                for (std::size_t j = 0; j < c; ++j) {
                    const double dxh = g[i * c + j] * gamma.data()[j];
                    m1 += dxh;
                    m2 += dxh * (*xhat)[i * c + j];
                }
                m1 /= static_cast<double>(c);
                m2 /= static_cast<double>(c);
                for (std::size_t j = 0; j < c; ++j) {
                    const double dxh = g[i * c + j] * gamma.data()[j];
                    gx[i * c + j] +=
                        (*inv_std)[i] * (dxh - m1 - (*xhat)[i * c + j] * m2);
                }
            }
        }
    });
}

// --- gradient checking -------------------------------------------------------

CheckReport grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                       const Tensor& x, double eps, double tol) {
    if (eps < 1e-6 || eps > 1e-3) {
        throw ConfigError("grad_check: eps must lie in [1e-6, 1e-3]");
    }
    Tensor var = x;
    const bool restore_flag = var.requires_grad();
    var.set_requires_grad(true);
    var.zero_grad();

    Tape tape;
    Tensor loss = f(tape, var);
    if (loss.numel() != 1) {
        throw ContractError("grad_check: function must return a scalar");
    }
    if (!std::isfinite(loss.value())) {
        throw NumericError("grad_check: non-finite function output");
    }
    tape.backward(loss);
    std::vector<double> g(var.numel(), 0.0);
    if (var.has_grad()) g = var.grad();

    CheckReport report;
    const std::size_t n = var.numel();
    for (std::size_t i = 0; i < n; ++i) {
        const double orig = var.data()[i];
        var.data()[i] = orig + eps;
        Tape tp;
        tp.set_grad_enabled(false);
        const double fp = f(tp, var).value();
        var.data()[i] = orig - eps;
        Tape tm;
        tm.set_grad_enabled(false);
        const double fm = f(tm, var).value();
        var.data()[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("grad_check: non-finite function output near coordinate " +
                               std::to_string(i));
        }
        const double fd = (fp - fm) / (2.0 * eps);
        const double denom = std::max({1.0, std::abs(g[i]), std::abs(fd)});
        const double rel = std::abs(g[i] - fd) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    var.zero_grad();
    var.set_requires_grad(restore_flag);
    report.pass = report.max_rel_error <= tol;
    return report;
}

} // namespace gia
