#include "ragcn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ragcn {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

namespace {

void check_shape(const Shape& shape) {
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor extent must be positive, got shape " + shape_str(shape));
    }
}

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, std::vector<double> values, bool requires_grad) {
    check_shape(shape);
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->shape = std::move(shape);
    impl->value = std::move(values);
    impl->requires_grad = requires_grad;
    impl->tracked = requires_grad;
    if (requires_grad) impl->grad.assign(impl->value.size(), 0.0);
    return impl;
}

}  // namespace

Tensor make_op_output(Shape shape, std::span<const Tensor> inputs);

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    check_shape(shape);
    const auto n = shape_numel(shape);
    return Tensor(make_impl(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    check_shape(shape);
    const auto n = shape_numel(shape);
    return Tensor(make_impl(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value), requires_grad));
}

Tensor Tensor::ones(Shape shape, bool requires_grad) { return full(std::move(shape), 1.0, requires_grad); }

Tensor Tensor::from_data(Shape shape, std::vector<double> values, bool requires_grad) {
    check_shape(shape);
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size())) {
        throw DimensionError("from_data: shape " + shape_str(shape) + " expects " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    return Tensor(make_impl(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

Tensor Tensor::he_uniform(Shape shape, int fan_in, Rng& rng) {
    if (fan_in <= 0) throw ConfigError("he_uniform: fan_in must be positive");
    const double bound = std::sqrt(6.0 / fan_in);
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-bound, bound);
    return from_data(std::move(shape), std::move(v), /*requires_grad=*/true);
}

const Shape& Tensor::shape() const {
    if (!impl_) throw UsageError("operation on an undefined tensor");
    return impl_->shape;
}

int Tensor::dim(int axis) const {
    const auto& s = shape();
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
    return s[static_cast<std::size_t>(axis)];
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(values().size()); }

const std::vector<double>& Tensor::values() const {
    if (!impl_) throw UsageError("operation on an undefined tensor");
    return impl_->value;
}

std::vector<double>& Tensor::mutable_values() {
    if (!impl_) throw UsageError("operation on an undefined tensor");
    return impl_->value;
}

double Tensor::item() const {
    if (numel() != 1) throw UsageError("item() on tensor of shape " + shape_str(shape()));
    return values()[0];
}

double Tensor::at(std::initializer_list<int> index) const {
    const auto& s = shape();
    if (index.size() != s.size())
        throw DimensionError("index rank " + std::to_string(index.size()) + " vs shape " + shape_str(s));
    std::size_t linear = 0;
    std::size_t axis = 0;
    for (int i : index) {
        if (i < 0 || i >= s[axis]) throw DimensionError("index out of range for shape " + shape_str(s));
        linear = linear * static_cast<std::size_t>(s[axis]) + static_cast<std::size_t>(i);
        ++axis;
    }
    return values()[linear];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
bool Tensor::tracked() const { return impl_ && impl_->tracked; }
bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
    if (!has_grad()) throw UsageError("tensor has no gradient");
    return impl_->grad;
}

std::vector<double>& Tensor::mutable_grad() {
    if (!has_grad()) throw UsageError("tensor has no gradient");
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
    if (!impl_) return Tensor();
    return Tensor(make_impl(impl_->shape, impl_->value, /*requires_grad=*/false));
}

Tape& Tape::active() {
    thread_local Tape tape;
    return tape;
}

void Tape::record(std::function<void()> backward_rule) { rules_.push_back(std::move(backward_rule)); }

void Tape::register_output(std::shared_ptr<detail::TensorImpl> output) {
    outputs_.push_back(std::move(output));
}

void Tape::replay_backward() const {
    for (auto it = rules_.rbegin(); it != rules_.rend(); ++it) (*it)();
}

void Tape::reset_output_grads() const {
    for (const auto& output : outputs_) std::fill(output->grad.begin(), output->grad.end(), 0.0);
}

NoGradGuard::NoGradGuard() { ++Tape::active().recording_depth_; }
NoGradGuard::~NoGradGuard() { --Tape::active().recording_depth_; }

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) throw UsageError("backward expects a scalar loss");
    if (!loss.tracked()) throw UsageError("backward: loss is not connected to any tracked tensor");
    Tape& tape = Tape::active();
    if (tape.size() == 0) throw UsageError("backward: computation tape is empty");
    tape.reset_output_grads();
    loss.impl()->grad[0] += 1.0;
    tape.replay_backward();
}

BatchNormState BatchNormState::make(int channels) {
    if (channels <= 0) throw ConfigError("batch_norm: channel count must be positive");
    BatchNormState s;
    s.gamma = Tensor::ones({channels}, /*requires_grad=*/true);
    s.beta = Tensor::zeros({channels}, /*requires_grad=*/true);
    s.running_mean.assign(static_cast<std::size_t>(channels), 0.0);
    s.running_var.assign(static_cast<std::size_t>(channels), 1.0);
    return s;
}

Tensor make_op_output(Shape shape, std::span<const Tensor> inputs) {
    bool track = Tape::active().recording();
    if (track) {
        track = false;
        for (const auto& in : inputs) {
            if (in.defined() && in.tracked()) {
                track = true;
                break;
            }
        }
    }
    check_shape(shape);
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    auto impl = make_impl(std::move(shape), std::vector<double>(n, 0.0), false);
    impl->tracked = track;
    if (track) {
        impl->grad.assign(n, 0.0);
        Tape::active().register_output(impl);
    }
    return Tensor(std::move(impl));
}

namespace ops {

namespace {

using Impl = detail::TensorImpl;
using ImplPtr = std::shared_ptr<Impl>;

bool wants_grad(const ImplPtr& p) { return p && p->tracked && !p->grad.empty(); }

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw UsageError(std::string(op) + ": undefined tensor argument");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
}

std::int64_t prod(const Shape& s, std::size_t from, std::size_t to) {
    std::int64_t p = 1;
    for (std::size_t i = from; i < to; ++i) p *= s[i];
    return p;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    if (a.ndim() != 2 || b.ndim() != 2)
        throw DimensionError("matmul expects 2-d operands, got " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2)
        throw DimensionError("matmul: inner extents differ: " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    Tensor out = make_op_output({m, n}, std::array<Tensor, 2>{a, b});
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.mutable_values();
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double aip = av[static_cast<std::size_t>(i) * k + p];
            if (aip == 0.0) continue;
            const double* brow = &bv[static_cast<std::size_t>(p) * n];
            double* orow = &ov[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
        }
    }
    if (out.tracked()) {
        ImplPtr ai = a.impl_ptr(), bi = b.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([ai, bi, oi, m, k, n] {
            const auto& dy = oi->grad;
            if (wants_grad(ai)) {
                // dA = dC . B^T
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0.0;
                        const double* dyrow = &dy[static_cast<std::size_t>(i) * n];
                        const double* brow = &bi->value[static_cast<std::size_t>(p) * n];
                        for (int j = 0; j < n; ++j) acc += dyrow[j] * brow[j];
                        ai->grad[static_cast<std::size_t>(i) * k + p] += acc;
                    }
            }
            if (wants_grad(bi)) {
                // dB = A^T . dC
                for (int p = 0; p < k; ++p)
                    for (int i = 0; i < m; ++i) {
                        const double aip = ai->value[static_cast<std::size_t>(i) * k + p];
                        if (aip == 0.0) continue;
                        const double* dyrow = &dy[static_cast<std::size_t>(i) * n];
                        double* grow = &bi->grad[static_cast<std::size_t>(p) * n];
                        for (int j = 0; j < n; ++j) grow[j] += aip * dyrow[j];
                    }
            }
        });
    }
    return out;
}

Tensor joint_contract(const Tensor& x, const Tensor& b) {
    require_defined(x, "joint_contract");
    require_defined(b, "joint_contract");
    if (b.ndim() != 2)
        throw DimensionError("joint_contract: second operand must be 2-d, got " + shape_str(b.shape()));
    if (x.ndim() < 1 || x.dim(x.ndim() - 1) != b.dim(0))
        throw DimensionError("joint_contract: trailing axis of " + shape_str(x.shape()) +
                             " must match rows of " + shape_str(b.shape()));
    const int v = b.dim(0), w = b.dim(1);
    const std::int64_t rows = x.numel() / v;
    Shape out_shape = x.shape();
    out_shape.back() = w;
    Tensor out = make_op_output(std::move(out_shape), std::array<Tensor, 2>{x, b});
    const auto& xv = x.values();
    const auto& bv = b.values();
    auto& ov = out.mutable_values();
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xrow = &xv[static_cast<std::size_t>(r) * v];
        double* orow = &ov[static_cast<std::size_t>(r) * w];
        for (int i = 0; i < v; ++i) {
            const double xi = xrow[i];
            if (xi == 0.0) continue;
            const double* brow = &bv[static_cast<std::size_t>(i) * w];
            for (int j = 0; j < w; ++j) orow[j] += xi * brow[j];
        }
    }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), bi = b.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, bi, oi, rows, v, w] {
            const auto& dy = oi->grad;
            if (wants_grad(xi)) {
                for (std::int64_t r = 0; r < rows; ++r) {
                    const double* dyrow = &dy[static_cast<std::size_t>(r) * w];
                    double* gxrow = &xi->grad[static_cast<std::size_t>(r) * v];
                    for (int i = 0; i < v; ++i) {
                        const double* brow = &bi->value[static_cast<std::size_t>(i) * w];
                        double acc = 0.0;
                        for (int j = 0; j < w; ++j) acc += dyrow[j] * brow[j];
                        gxrow[i] += acc;
                    }
                }
            }
            if (wants_grad(bi)) {
                for (std::int64_t r = 0; r < rows; ++r) {
                    const double* xrow = &xi->value[static_cast<std::size_t>(r) * v];
                    const double* dyrow = &dy[static_cast<std::size_t>(r) * w];
                    for (int i = 0; i < v; ++i) {
                        const double xr = xrow[i];
                        if (xr == 0.0) continue;
                        double* grow = &bi->grad[static_cast<std::size_t>(i) * w];
                        for (int j = 0; j < w; ++j) grow[j] += xr * dyrow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor masked_contract(const Tensor& x, const Tensor& gate, const Tensor& importance) {
    require_defined(x, "masked_contract");
    require_defined(gate, "masked_contract");
    require_defined(importance, "masked_contract");
    if (gate.ndim() != 2 || gate.dim(0) != gate.dim(1))
        throw DimensionError("masked_contract: gate must be square, got " + shape_str(gate.shape()));
    require_same_shape(gate, importance, "masked_contract");
    if (gate.tracked()) throw UsageError("masked_contract: the gate must be a constant");
    const int v = gate.dim(0);
    if (x.ndim() < 1 || x.dim(x.ndim() - 1) != v)
        throw DimensionError("masked_contract: trailing axis of " + shape_str(x.shape()) +
                             " must match gate " + shape_str(gate.shape()));
    const std::int64_t rows = x.numel() / v;

    // nonzero gate entries, (i, j, gate value)
    struct Nz {
        int i, j;
        double g;
    };
    auto nz = std::make_shared<std::vector<Nz>>();
    const auto& gv = gate.values();
    for (int i = 0; i < v; ++i)
        for (int j = 0; j < v; ++j) {
            const double g = gv[static_cast<std::size_t>(i) * v + j];
            if (g != 0.0) nz->push_back({i, j, g});
        }

    Tensor out = make_op_output(x.shape(), std::array<Tensor, 2>{x, importance});
    const auto& xv = x.values();
    const auto& mv = importance.values();
    auto& ov = out.mutable_values();
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xrow = &xv[static_cast<std::size_t>(r) * v];
        double* orow = &ov[static_cast<std::size_t>(r) * v];
        for (const auto& e : *nz)
            orow[e.j] += xrow[e.i] * e.g * mv[static_cast<std::size_t>(e.i) * v + e.j];
    }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), mi = importance.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, mi, oi, nz, rows, v] {
            const auto& dy = oi->grad;
            const bool gx = wants_grad(xi), gm = wants_grad(mi);
            if (gx) {
                for (std::int64_t r = 0; r < rows; ++r) {
                    const double* dyrow = &dy[static_cast<std::size_t>(r) * v];
                    double* gxrow = &xi->grad[static_cast<std::size_t>(r) * v];
                    for (const auto& e : *nz)
                        gxrow[e.i] += dyrow[e.j] * e.g * mi->value[static_cast<std::size_t>(e.i) * v + e.j];
                }
            }
            if (gm) {
                for (const auto& e : *nz) {
                    double acc = 0.0;
                    for (std::int64_t r = 0; r < rows; ++r)
                        acc += xi->value[static_cast<std::size_t>(r) * v + e.i] *
                               dy[static_cast<std::size_t>(r) * v + e.j];
                    mi->grad[static_cast<std::size_t>(e.i) * v + e.j] += acc * e.g;
                }
            }
        });
    }
    return out;
}

Tensor temporal_conv(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride) {
    require_defined(x, "temporal_conv");
    require_defined(weight, "temporal_conv");
    if (x.ndim() != 4)
        throw DimensionError("temporal_conv expects [N,C,T,V] input, got " + shape_str(x.shape()));
    if (weight.ndim() != 4 || weight.dim(3) != 1)
        throw DimensionError("temporal_conv expects [C',C,L,1] weight, got " + shape_str(weight.shape()));
    const int n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
    const int co = weight.dim(0), ci = weight.dim(1), l = weight.dim(2);
    if (ci != c)
        throw DimensionError("temporal_conv: weight input channels " + shape_str(weight.shape()) +
                             " do not match input " + shape_str(x.shape()));
    if (l % 2 == 0) throw ConfigError("temporal_conv: window size must be odd, got " + std::to_string(l));
    if (stride < 1) throw ConfigError("temporal_conv: stride must be >= 1, got " + std::to_string(stride));
    if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != co))
        throw DimensionError("temporal_conv: bias shape " + shape_str(bias.shape()) +
                             " does not match output channels " + std::to_string(co));
    const int pad = (l - 1) / 2;
    const int to = (t + stride - 1) / stride;  // ceil(T / stride)

    std::array<Tensor, 3> ins{x, weight, bias.defined() ? bias : Tensor()};
    Tensor out = make_op_output({n, co, to, v}, std::span<const Tensor>(ins.data(), bias.defined() ? 3 : 2));
    const auto& xv = x.values();
    const auto& wv = weight.values();
    auto& ov = out.mutable_values();

    const std::size_t x_n = static_cast<std::size_t>(c) * t * v;
    const std::size_t o_n = static_cast<std::size_t>(co) * to * v;
    for (int in = 0; in < n; ++in) {
        for (int oc = 0; oc < co; ++oc) {
            const double b0 = bias.defined() ? bias.values()[static_cast<std::size_t>(oc)] : 0.0;
            for (int ot = 0; ot < to; ++ot) {
                double* orow = &ov[in * o_n + (static_cast<std::size_t>(oc) * to + ot) * v];
                if (b0 != 0.0)
                    for (int j = 0; j < v; ++j) orow[j] = b0;
                for (int icn = 0; icn < c; ++icn) {
                    const double* wrow = &wv[(static_cast<std::size_t>(oc) * c + icn) * l];
                    for (int k = 0; k < l; ++k) {
                        const int tau = ot * stride + k - pad;
                        if (tau < 0 || tau >= t) continue;
                        const double wk = wrow[k];
                        if (wk == 0.0) continue;
                        const double* xrow = &xv[in * x_n + (static_cast<std::size_t>(icn) * t + tau) * v];
                        for (int j = 0; j < v; ++j) orow[j] += wk * xrow[j];
                    }
                }
            }
        }
    }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), wi = weight.impl_ptr(), oi = out.impl_ptr();
        ImplPtr bi = bias.defined() ? bias.impl_ptr() : nullptr;
        Tape::active().record([xi, wi, bi, oi, n, c, t, v, co, l, pad, to, stride] {
            const auto& dy = oi->grad;
            const std::size_t x_n = static_cast<std::size_t>(c) * t * v;
            const std::size_t o_n = static_cast<std::size_t>(co) * to * v;
            const bool gx = wants_grad(xi), gw = wants_grad(wi), gb = bi && wants_grad(bi);
            for (int in = 0; in < n; ++in) {
                for (int oc = 0; oc < co; ++oc) {
                    for (int ot = 0; ot < to; ++ot) {
                        const double* dyrow = &dy[in * o_n + (static_cast<std::size_t>(oc) * to + ot) * v];
                        if (gb) {
                            double acc = 0.0;
                            for (int j = 0; j < v; ++j) acc += dyrow[j];
                            bi->grad[static_cast<std::size_t>(oc)] += acc;
                        }
                        for (int icn = 0; icn < c; ++icn) {
                            const double* wrow = &wi->value[(static_cast<std::size_t>(oc) * c + icn) * l];
                            double* gwrow = gw ? &wi->grad[(static_cast<std::size_t>(oc) * c + icn) * l] : nullptr;
                            for (int k = 0; k < l; ++k) {
                                const int tau = ot * stride + k - pad;
                                if (tau < 0 || tau >= t) continue;
                                const std::size_t xoff = in * x_n + (static_cast<std::size_t>(icn) * t + tau) * v;
                                if (gw) {
                                    const double* xrow = &xi->value[xoff];
                                    double acc = 0.0;
                                    for (int j = 0; j < v; ++j) acc += dyrow[j] * xrow[j];
                                    gwrow[k] += acc;
                                }
                                if (gx) {
                                    const double wk = wrow[k];
                                    if (wk != 0.0) {
                                        double* gxrow = &xi->grad[xoff];
                                        for (int j = 0; j < v; ++j) gxrow[j] += wk * dyrow[j];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor batch_norm(const Tensor& x, BatchNormState& state, bool training) {
    require_defined(x, "batch_norm");
    if (x.ndim() != 4)
        throw DimensionError("batch_norm expects [N,C,T,V] input, got " + shape_str(x.shape()));
    const int n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
    if (n == 0) throw InputError("batch_norm: batch of size 0");
    if (state.channels() != c)
        throw DimensionError("batch_norm: state has " + std::to_string(state.channels()) +
                             " channels, input " + shape_str(x.shape()));
    const std::int64_t m = static_cast<std::int64_t>(n) * t * v;  // elements per channel
    const std::size_t plane = static_cast<std::size_t>(t) * v;
    const std::size_t x_n = static_cast<std::size_t>(c) * plane;
    const double eps = state.eps;

    std::vector<double> mean(static_cast<std::size_t>(c), 0.0);
    std::vector<double> inv_std(static_cast<std::size_t>(c), 0.0);
    if (training) {
        std::vector<double> var(static_cast<std::size_t>(c), 0.0);
        const auto& xv = x.values();
        for (int ch = 0; ch < c; ++ch) {
            double s = 0.0;
            for (int in = 0; in < n; ++in) {
                const double* row = &xv[in * x_n + ch * plane];
                for (std::size_t j = 0; j < plane; ++j) s += row[j];
            }
            mean[ch] = s / static_cast<double>(m);
            double sq = 0.0;
            for (int in = 0; in < n; ++in) {
                const double* row = &xv[in * x_n + ch * plane];
                for (std::size_t j = 0; j < plane; ++j) {
                    const double d = row[j] - mean[ch];
                    sq += d * d;
                }
            }
            var[ch] = sq / static_cast<double>(m);
            inv_std[ch] = 1.0 / std::sqrt(var[ch] + eps);
            state.running_mean[ch] = (1.0 - state.momentum) * state.running_mean[ch] + state.momentum * mean[ch];
            state.running_var[ch] = (1.0 - state.momentum) * state.running_var[ch] + state.momentum * var[ch];
        }
    } else {
        for (int ch = 0; ch < c; ++ch) {
            mean[ch] = state.running_mean[ch];
            inv_std[ch] = 1.0 / std::sqrt(state.running_var[ch] + eps);
        }
    }

    std::array<Tensor, 3> ins{x, state.gamma, state.beta};
    Tensor out = make_op_output(x.shape(), ins);
    const auto& xv = x.values();
    const auto& gv = state.gamma.values();
    const auto& bv = state.beta.values();
    auto& ov = out.mutable_values();
    // xhat saved for the backward rule
    auto xhat = std::make_shared<std::vector<double>>(xv.size());
    for (int in = 0; in < n; ++in) {
        for (int ch = 0; ch < c; ++ch) {
            const std::size_t off = in * x_n + ch * plane;
            const double mu = mean[ch], is = inv_std[ch], g = gv[ch], b = bv[ch];
            for (std::size_t j = 0; j < plane; ++j) {
                const double xh = (xv[off + j] - mu) * is;
                (*xhat)[off + j] = xh;
                ov[off + j] = g * xh + b;
            }
        }
    }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), gi = state.gamma.impl_ptr(), bi = state.beta.impl_ptr(), oi = out.impl_ptr();
        auto istd = std::make_shared<std::vector<double>>(inv_std);
        Tape::active().record([xi, gi, bi, oi, xhat, istd, n, c, m, plane, x_n, training] {
            const auto& dy = oi->grad;
            for (int ch = 0; ch < c; ++ch) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (int in = 0; in < n; ++in) {
                    const std::size_t off = in * x_n + ch * plane;
                    for (std::size_t j = 0; j < plane; ++j) {
                        sum_dy += dy[off + j];
                        sum_dy_xhat += dy[off + j] * (*xhat)[off + j];
                    }
                }
                if (wants_grad(gi)) gi->grad[ch] += sum_dy_xhat;
                if (wants_grad(bi)) bi->grad[ch] += sum_dy;
                if (wants_grad(xi)) {
                    const double g = gi->value[ch], is = (*istd)[ch];
                    if (training) {
                        // dx = g*is/m * (m*dy - sum(dy) - xhat*sum(dy*xhat))
                        const double inv_m = 1.0 / static_cast<double>(m);
                        for (int in = 0; in < n; ++in) {
                            const std::size_t off = in * x_n + ch * plane;
                            for (std::size_t j = 0; j < plane; ++j) {
                                xi->grad[off + j] += g * is * inv_m *
                                                     (static_cast<double>(m) * dy[off + j] - sum_dy -
                                                      (*xhat)[off + j] * sum_dy_xhat);
                            }
                        }
                    } else {
                        for (int in = 0; in < n; ++in) {
                            const std::size_t off = in * x_n + ch * plane;
                            for (std::size_t j = 0; j < plane; ++j) xi->grad[off + j] += g * is * dy[off + j];
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor relu(const Tensor& x) {
    require_defined(x, "relu");
    Tensor out = make_op_output(x.shape(), std::array<Tensor, 1>{x});
    const auto& xv = x.values();
    auto& ov = out.mutable_values();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, oi] {
            if (!wants_grad(xi)) return;
            for (std::size_t i = 0; i < xi->value.size(); ++i)
                if (xi->value[i] > 0.0) xi->grad[i] += oi->grad[i];
        });
    }
    return out;
}

Tensor softmax(const Tensor& x, int axis) {
    require_defined(x, "softmax");
    if (axis < 0 || axis >= x.ndim())
        throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for " +
                             shape_str(x.shape()));
    const auto& s = x.shape();
    const std::int64_t outer = prod(s, 0, static_cast<std::size_t>(axis));
    const std::int64_t len = s[static_cast<std::size_t>(axis)];
    const std::int64_t inner = prod(s, static_cast<std::size_t>(axis) + 1, s.size());
    Tensor out = make_op_output(x.shape(), std::array<Tensor, 1>{x});
    const auto& xv = x.values();
    auto& ov = out.mutable_values();
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t in = 0; in < inner; ++in) {
            const std::size_t base = static_cast<std::size_t>(o * len * inner + in);
            double mx = xv[base];
            for (std::int64_t k = 1; k < len; ++k)
                mx = std::max(mx, xv[base + static_cast<std::size_t>(k * inner)]);
            double sum = 0.0;
            for (std::int64_t k = 0; k < len; ++k) {
                const std::size_t idx = base + static_cast<std::size_t>(k * inner);
                ov[idx] = std::exp(xv[idx] - mx);
                sum += ov[idx];
            }
            const double inv = 1.0 / sum;
            for (std::int64_t k = 0; k < len; ++k) ov[base + static_cast<std::size_t>(k * inner)] *= inv;
        }
    }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, oi, outer, len, inner] {
            if (!wants_grad(xi)) return;
            const auto& y = oi->value;
            const auto& dy = oi->grad;
            for (std::int64_t o = 0; o < outer; ++o) {
                for (std::int64_t in = 0; in < inner; ++in) {
                    const std::size_t base = static_cast<std::size_t>(o * len * inner + in);
                    double dot = 0.0;
                    for (std::int64_t k = 0; k < len; ++k) {
                        const std::size_t idx = base + static_cast<std::size_t>(k * inner);
                        dot += dy[idx] * y[idx];
                    }
                    for (std::int64_t k = 0; k < len; ++k) {
                        const std::size_t idx = base + static_cast<std::size_t>(k * inner);
                        xi->grad[idx] += y[idx] * (dy[idx] - dot);
                    }
                }
            }
        });
    }
    return out;
}

Tensor global_avg_pool(const Tensor& x) {
    require_defined(x, "global_avg_pool");
    if (x.ndim() != 4)
        throw DimensionError("global_avg_pool expects [N,C,T,V] input, got " + shape_str(x.shape()));
    const int n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(t) * v;
    Tensor out = make_op_output({n, c}, std::array<Tensor, 1>{x});
    const auto& xv = x.values();
    auto& ov = out.mutable_values();
    const double inv = 1.0 / static_cast<double>(plane);
    for (int in = 0; in < n; ++in)
        for (int ch = 0; ch < c; ++ch) {
            const double* row = &xv[(static_cast<std::size_t>(in) * c + ch) * plane];
            double s = 0.0;
            for (std::size_t j = 0; j < plane; ++j) s += row[j];
            ov[static_cast<std::size_t>(in) * c + ch] = s * inv;
        }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, oi, n, c, plane, inv] {
            if (!wants_grad(xi)) return;
            for (int in = 0; in < n; ++in)
                for (int ch = 0; ch < c; ++ch) {
                    const double g = oi->grad[static_cast<std::size_t>(in) * c + ch] * inv;
                    double* row = &xi->grad[(static_cast<std::size_t>(in) * c + ch) * plane];
                    for (std::size_t j = 0; j < plane; ++j) row[j] += g;
                }
        });
    }
    return out;
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
    require_defined(logits, "cross_entropy");
    if (logits.ndim() != 2)
        throw DimensionError("cross_entropy expects [N,K] logits, got " + shape_str(logits.shape()));
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw InputError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(n));
    if (n == 0) throw InputError("cross_entropy: empty batch");
    for (int i = 0; i < n; ++i)
        if (labels[i] < 0 || labels[i] >= k)
            throw InputError("cross_entropy: label " + std::to_string(labels[i]) + " out of range [0," +
                             std::to_string(k) + ")");
    Tensor out = make_op_output({1}, std::array<Tensor, 1>{logits});
    const auto& zv = logits.values();
    auto probs = std::make_shared<std::vector<double>>(zv.size());
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* row = &zv[static_cast<std::size_t>(i) * k];
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        total += lse - row[labels[static_cast<std::size_t>(i)]];
        for (int j = 0; j < k; ++j)
            (*probs)[static_cast<std::size_t>(i) * k + j] = std::exp(row[j] - lse);
    }
    out.mutable_values()[0] = total / static_cast<double>(n);
    if (out.tracked()) {
        ImplPtr zi = logits.impl_ptr(), oi = out.impl_ptr();
        std::vector<int> labels_copy(labels.begin(), labels.end());
        Tape::active().record([zi, oi, probs, labels_copy, n, k] {
            if (!wants_grad(zi)) return;
            const double g = oi->grad[0] / static_cast<double>(n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < k; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * k + j;
                    const double onehot = (j == labels_copy[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
                    zi->grad[idx] += g * ((*probs)[idx] - onehot);
                }
            }
        });
    }
    return out;
}

namespace {

template <typename Fwd, typename BwdA, typename BwdB>
Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, BwdA bwd_a, BwdB bwd_b) {
    require_defined(a, name);
    require_defined(b, name);
    require_same_shape(a, b, name);
    Tensor out = make_op_output(a.shape(), std::array<Tensor, 2>{a, b});
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.mutable_values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = fwd(av[i], bv[i]);
    if (out.tracked()) {
        ImplPtr ai = a.impl_ptr(), bi = b.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([ai, bi, oi, bwd_a, bwd_b] {
            const auto& dy = oi->grad;
            if (wants_grad(ai))
                for (std::size_t i = 0; i < dy.size(); ++i) ai->grad[i] += bwd_a(dy[i], ai->value[i], bi->value[i]);
            if (wants_grad(bi))
                for (std::size_t i = 0; i < dy.size(); ++i) bi->grad[i] += bwd_b(dy[i], ai->value[i], bi->value[i]);
        });
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double g, double, double y) { return g * y; }, [](double g, double x, double) { return g * x; });
}

Tensor scale(const Tensor& x, double factor) {
    require_defined(x, "scale");
    Tensor out = make_op_output(x.shape(), std::array<Tensor, 1>{x});
    const auto& xv = x.values();
    auto& ov = out.mutable_values();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = xv[i] * factor;
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, oi, factor] {
            if (!wants_grad(xi)) return;
            for (std::size_t i = 0; i < xi->grad.size(); ++i) xi->grad[i] += factor * oi->grad[i];
        });
    }
    return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
    require_defined(x, "add_channel_bias");
    require_defined(bias, "add_channel_bias");
    if (x.ndim() < 2 || bias.ndim() != 1 || bias.dim(0) != x.dim(1))
        throw DimensionError("add_channel_bias: bias " + shape_str(bias.shape()) +
                             " does not match channel axis of " + shape_str(x.shape()));
    const int n = x.dim(0), c = x.dim(1);
    const std::int64_t inner = prod(x.shape(), 2, x.shape().size());
    Tensor out = make_op_output(x.shape(), std::array<Tensor, 2>{x, bias});
    const auto& xv = x.values();
    const auto& bv = bias.values();
    auto& ov = out.mutable_values();
    for (int in = 0; in < n; ++in)
        for (int ch = 0; ch < c; ++ch) {
            const std::size_t off = (static_cast<std::size_t>(in) * c + ch) * inner;
            const double b = bv[ch];
            for (std::int64_t j = 0; j < inner; ++j) ov[off + j] = xv[off + j] + b;
        }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), bi = bias.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, bi, oi, n, c, inner] {
            const auto& dy = oi->grad;
            if (wants_grad(xi))
                for (std::size_t i = 0; i < dy.size(); ++i) xi->grad[i] += dy[i];
            if (wants_grad(bi))
                for (int in = 0; in < n; ++in)
                    for (int ch = 0; ch < c; ++ch) {
                        const std::size_t off = (static_cast<std::size_t>(in) * c + ch) * inner;
                        double acc = 0.0;
                        for (std::int64_t j = 0; j < inner; ++j) acc += dy[off + j];
                        bi->grad[ch] += acc;
                    }
        });
    }
    return out;
}

Tensor concat(std::span<const Tensor> parts, int axis) {
    if (parts.empty()) throw UsageError("concat: no tensors given");
    for (const auto& p : parts) require_defined(p, "concat");
    const auto& first = parts[0].shape();
    if (axis < 0 || axis >= static_cast<int>(first.size()))
        throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " + shape_str(first));
    int total = 0;
    for (const auto& p : parts) {
        const auto& s = p.shape();
        if (s.size() != first.size())
            throw DimensionError("concat: rank mismatch " + shape_str(first) + " vs " + shape_str(s));
        for (std::size_t i = 0; i < s.size(); ++i)
            if (static_cast<int>(i) != axis && s[i] != first[i])
                throw DimensionError("concat: shape mismatch " + shape_str(first) + " vs " + shape_str(s));
        total += s[static_cast<std::size_t>(axis)];
    }
    Shape out_shape = first;
    out_shape[static_cast<std::size_t>(axis)] = total;
    Tensor out = make_op_output(out_shape, parts);
    const std::int64_t outer = prod(out_shape, 0, static_cast<std::size_t>(axis));
    const std::int64_t inner = prod(out_shape, static_cast<std::size_t>(axis) + 1, out_shape.size());
    auto& ov = out.mutable_values();
    std::int64_t offset = 0;
    for (const auto& p : parts) {
        const std::int64_t len = p.shape()[static_cast<std::size_t>(axis)];
        const auto& pv = p.values();
        for (std::int64_t o = 0; o < outer; ++o) {
            const double* src = &pv[static_cast<std::size_t>(o * len * inner)];
            double* dst = &ov[static_cast<std::size_t>((o * total + offset) * inner)];
            std::copy(src, src + len * inner, dst);
        }
        offset += len;
    }
    if (out.tracked()) {
        std::vector<ImplPtr> impls;
        std::vector<std::int64_t> lens;
        for (const auto& p : parts) {
            impls.push_back(p.impl_ptr());
            lens.push_back(p.shape()[static_cast<std::size_t>(axis)]);
        }
        ImplPtr oi = out.impl_ptr();
        Tape::active().record([impls, lens, oi, outer, inner, total] {
            const auto& dy = oi->grad;
            std::int64_t offset = 0;
            for (std::size_t pi = 0; pi < impls.size(); ++pi) {
                const std::int64_t len = lens[pi];
                if (wants_grad(impls[pi])) {
                    auto& g = impls[pi]->grad;
                    for (std::int64_t o = 0; o < outer; ++o) {
                        const double* src = &dy[static_cast<std::size_t>((o * total + offset) * inner)];
                        double* dst = &g[static_cast<std::size_t>(o * len * inner)];
                        for (std::int64_t j = 0; j < len * inner; ++j) dst[j] += src[j];
                    }
                }
                offset += len;
            }
        });
    }
    return out;
}

Tensor slice(const Tensor& x, int axis, int start, int length) {
    require_defined(x, "slice");
    const auto& s = x.shape();
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw DimensionError("slice: axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    const int extent = s[static_cast<std::size_t>(axis)];
    if (start < 0 || length <= 0 || start + length > extent)
        throw DimensionError("slice: range [" + std::to_string(start) + "," + std::to_string(start + length) +
                             ") out of bounds for axis of extent " + std::to_string(extent));
    Shape out_shape = s;
    out_shape[static_cast<std::size_t>(axis)] = length;
    const std::int64_t outer = prod(s, 0, static_cast<std::size_t>(axis));
    const std::int64_t inner = prod(s, static_cast<std::size_t>(axis) + 1, s.size());
    Tensor out = make_op_output(out_shape, std::array<Tensor, 1>{x});
    const auto& xv = x.values();
    auto& ov = out.mutable_values();
    for (std::int64_t o = 0; o < outer; ++o) {
        const double* src = &xv[static_cast<std::size_t>((o * extent + start) * inner)];
        double* dst = &ov[static_cast<std::size_t>(o * length * inner)];
        std::copy(src, src + length * inner, dst);
    }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, oi, outer, inner, extent, start, length] {
            if (!wants_grad(xi)) return;
            const auto& dy = oi->grad;
            for (std::int64_t o = 0; o < outer; ++o) {
                const double* src = &dy[static_cast<std::size_t>(o * length * inner)];
                double* dst = &xi->grad[static_cast<std::size_t>((o * extent + start) * inner)];
                for (std::int64_t j = 0; j < length * inner; ++j) dst[j] += src[j];
            }
        });
    }
    return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
    require_defined(x, "reshape");
    if (shape_numel(shape) != x.numel())
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    Tensor out = make_op_output(shape, std::array<Tensor, 1>{x});
    out.mutable_values() = x.values();
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, oi] {
            if (!wants_grad(xi)) return;
            for (std::size_t i = 0; i < xi->grad.size(); ++i) xi->grad[i] += oi->grad[i];
        });
    }
    return out;
}

namespace {

std::vector<std::int64_t> strides_of(const Shape& s) {
    std::vector<std::int64_t> st(s.size(), 1);
    for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i)
        st[static_cast<std::size_t>(i)] = st[static_cast<std::size_t>(i) + 1] * s[static_cast<std::size_t>(i) + 1];
    return st;
}

// out[i0,i1,...] = in[axes-permuted index]; returns row-major values of the
// permuted array.
std::vector<double> permute_raw(const std::vector<double>& in, const Shape& in_shape,
                                const std::vector<int>& axes) {
    const auto in_strides = strides_of(in_shape);
    Shape out_shape(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = in_shape[static_cast<std::size_t>(axes[i])];
    std::vector<std::int64_t> step(axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) step[i] = in_strides[static_cast<std::size_t>(axes[i])];
    std::vector<double> out(in.size());
    const std::size_t nd = axes.size();
    std::vector<std::int64_t> idx(nd, 0);
    std::int64_t src = 0;
    for (std::size_t o = 0; o < out.size(); ++o) {
        out[o] = in[static_cast<std::size_t>(src)];
        for (int a = static_cast<int>(nd) - 1; a >= 0; --a) {
            idx[static_cast<std::size_t>(a)]++;
            src += step[static_cast<std::size_t>(a)];
            if (idx[static_cast<std::size_t>(a)] < out_shape[static_cast<std::size_t>(a)]) break;
            src -= step[static_cast<std::size_t>(a)] * out_shape[static_cast<std::size_t>(a)];
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return out;
}

}  // namespace

Tensor permute(const Tensor& x, const std::vector<int>& axes) {
    require_defined(x, "permute");
    const auto& s = x.shape();
    if (axes.size() != s.size()) throw DimensionError("permute: axes rank mismatch for " + shape_str(s));
    std::vector<bool> seen(axes.size(), false);
    for (int a : axes) {
        if (a < 0 || a >= static_cast<int>(axes.size()) || seen[static_cast<std::size_t>(a)])
            throw DimensionError("permute: axes are not a permutation");
        seen[static_cast<std::size_t>(a)] = true;
    }
    Shape out_shape(s.size());
    for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = s[static_cast<std::size_t>(axes[i])];
    Tensor out = make_op_output(out_shape, std::array<Tensor, 1>{x});
    out.mutable_values() = permute_raw(x.values(), s, axes);
    if (out.tracked()) {
        std::vector<int> inverse(axes.size());
        for (std::size_t i = 0; i < axes.size(); ++i) inverse[static_cast<std::size_t>(axes[i])] = static_cast<int>(i);
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Shape oshape = out_shape;
        Tape::active().record([xi, oi, inverse, oshape] {
            if (!wants_grad(xi)) return;
            const auto back = permute_raw(oi->grad, oshape, inverse);
            for (std::size_t i = 0; i < back.size(); ++i) xi->grad[i] += back[i];
        });
    }
    return out;
}

Tensor mean_axis(const Tensor& x, int axis) {
    require_defined(x, "mean_axis");
    const auto& s = x.shape();
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw DimensionError("mean_axis: axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    const std::int64_t outer = prod(s, 0, static_cast<std::size_t>(axis));
    const std::int64_t len = s[static_cast<std::size_t>(axis)];
    const std::int64_t inner = prod(s, static_cast<std::size_t>(axis) + 1, s.size());
    Shape out_shape;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (static_cast<int>(i) != axis) out_shape.push_back(s[i]);
    if (out_shape.empty()) out_shape.push_back(1);
    Tensor out = make_op_output(out_shape, std::array<Tensor, 1>{x});
    const auto& xv = x.values();
    auto& ov = out.mutable_values();
    const double inv = 1.0 / static_cast<double>(len);
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t j = 0; j < inner; ++j) {
            double acc = 0.0;
            for (std::int64_t k = 0; k < len; ++k)
                acc += xv[static_cast<std::size_t>((o * len + k) * inner + j)];
            ov[static_cast<std::size_t>(o * inner + j)] = acc * inv;
        }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, oi, outer, len, inner, inv] {
            if (!wants_grad(xi)) return;
            for (std::int64_t o = 0; o < outer; ++o)
                for (std::int64_t j = 0; j < inner; ++j) {
                    const double g = oi->grad[static_cast<std::size_t>(o * inner + j)] * inv;
                    for (std::int64_t k = 0; k < len; ++k)
                        xi->grad[static_cast<std::size_t>((o * len + k) * inner + j)] += g;
                }
        });
    }
    return out;
}

Tensor sum(const Tensor& x) {
    require_defined(x, "sum");
    Tensor out = make_op_output({1}, std::array<Tensor, 1>{x});
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    out.mutable_values()[0] = acc;
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, oi] {
            if (!wants_grad(xi)) return;
            const double g = oi->grad[0];
            for (std::size_t i = 0; i < xi->grad.size(); ++i) xi->grad[i] += g;
        });
    }
    return out;
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
    require_defined(x, "dropout");
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return x;
    const double keep = 1.0 - rate;
    const double scale_up = 1.0 / keep;
    auto mask = std::make_shared<std::vector<double>>(x.values().size());
    for (auto& m : *mask) m = rng.bernoulli(keep) ? scale_up : 0.0;
    Tensor out = make_op_output(x.shape(), std::array<Tensor, 1>{x});
    const auto& xv = x.values();
    auto& ov = out.mutable_values();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = xv[i] * (*mask)[i];
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), oi = out.impl_ptr();
        Tape::active().record([xi, oi, mask] {
            if (!wants_grad(xi)) return;
            for (std::size_t i = 0; i < xi->grad.size(); ++i) xi->grad[i] += oi->grad[i] * (*mask)[i];
        });
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_defined(x, "linear");
    require_defined(weight, "linear");
    if (x.ndim() != 2 || weight.ndim() != 2 || x.dim(1) != weight.dim(1))
        throw DimensionError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                             shape_str(weight.shape()));
    const int n = x.dim(0), ci = x.dim(1), k = weight.dim(0);
    if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != k))
        throw DimensionError("linear: bias " + shape_str(bias.shape()) + " does not match " +
                             std::to_string(k) + " outputs");
    std::array<Tensor, 3> ins{x, weight, bias.defined() ? bias : Tensor()};
    Tensor out = make_op_output({n, k}, std::span<const Tensor>(ins.data(), bias.defined() ? 3 : 2));
    const auto& xv = x.values();
    const auto& wv = weight.values();
    auto& ov = out.mutable_values();
    for (int i = 0; i < n; ++i) {
        const double* xrow = &xv[static_cast<std::size_t>(i) * ci];
        double* orow = &ov[static_cast<std::size_t>(i) * k];
        for (int o = 0; o < k; ++o) {
            const double* wrow = &wv[static_cast<std::size_t>(o) * ci];
            double acc = bias.defined() ? bias.values()[static_cast<std::size_t>(o)] : 0.0;
            for (int c = 0; c < ci; ++c) acc += xrow[c] * wrow[c];
            orow[o] = acc;
        }
    }
    if (out.tracked()) {
        ImplPtr xi = x.impl_ptr(), wi = weight.impl_ptr(), oi = out.impl_ptr();
        ImplPtr bi = bias.defined() ? bias.impl_ptr() : nullptr;
        Tape::active().record([xi, wi, bi, oi, n, ci, k] {
            const auto& dy = oi->grad;
            const bool gx = wants_grad(xi), gw = wants_grad(wi), gb = bi && wants_grad(bi);
            for (int i = 0; i < n; ++i) {
                const double* dyrow = &dy[static_cast<std::size_t>(i) * k];
                const double* xrow = &xi->value[static_cast<std::size_t>(i) * ci];
                for (int o = 0; o < k; ++o) {
                    const double g = dyrow[o];
                    if (g == 0.0) continue;
                    if (gx) {
                        const double* wrow = &wi->value[static_cast<std::size_t>(o) * ci];
                        double* gxrow = &xi->grad[static_cast<std::size_t>(i) * ci];
                        for (int c = 0; c < ci; ++c) gxrow[c] += g * wrow[c];
                    }
                    if (gw) {
                        double* gwrow = &wi->grad[static_cast<std::size_t>(o) * ci];
                        for (int c = 0; c < ci; ++c) gwrow[c] += g * xrow[c];
                    }
                    if (gb) bi->grad[static_cast<std::size_t>(o)] += g;
                }
            }
        });
    }
    return out;
}

}  // namespace ops

}  // namespace ragcn
