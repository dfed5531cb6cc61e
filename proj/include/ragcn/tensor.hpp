#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ragcn/errors.hpp"
#include "ragcn/rng.hpp"

namespace ragcn {

using Shape = std::vector<int>;

std::string shape_str(const Shape& shape);
std::int64_t shape_numel(const Shape& shape);

namespace detail {
struct TensorImpl {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;     // allocated only while tracked
    bool requires_grad = false;   // leaf parameter flag
    bool tracked = false;         // reachable from a recorded op or a leaf
};
}  // namespace detail

// Dense row-major f64 array with reverse-mode gradients. Cheap to copy: a
// Tensor is a handle to shared storage. Values are immutable once an op has
// consumed the tensor; only gradient accumulation mutates shared state.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor ones(Shape shape, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value);
    // Uniform in (-bound, bound) with bound = sqrt(6 / fan_in).
    static Tensor he_uniform(Shape shape, int fan_in, Rng& rng);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    int ndim() const { return static_cast<int>(shape().size()); }
    int dim(int axis) const;
    std::int64_t numel() const;

    const std::vector<double>& values() const;
    std::vector<double>& mutable_values();
    double item() const;  // scalar tensors only
    double at(std::initializer_list<int> index) const;

    bool requires_grad() const;
    bool tracked() const;
    bool has_grad() const;
    const std::vector<double>& grad() const;
    std::vector<double>& mutable_grad();
    void zero_grad();

    // Same values, detached from the gradient graph (shares storage copy).
    Tensor detach() const;

    detail::TensorImpl* impl() const { return impl_.get(); }
    const std::shared_ptr<detail::TensorImpl>& impl_ptr() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<detail::TensorImpl> impl_;

    friend Tensor make_op_output(Shape shape, std::span<const Tensor> inputs);
};

// Recorded forward operations, replayed in reverse by backward(). One tape
// per worker; training loops clear it between steps.
class Tape {
public:
    static Tape& active();

    void record(std::function<void()> backward_rule);
    void register_output(std::shared_ptr<detail::TensorImpl> output);
    bool recording() const { return recording_depth_ == 0; }
    std::size_t size() const { return rules_.size(); }
    void clear() {
        rules_.clear();
        outputs_.clear();
    }

    // Replays all recorded rules in reverse order.
    void replay_backward() const;

    // Zeroes the gradients of every recorded op output so a repeated
    // backward accumulates only on leaves.
    void reset_output_grads() const;

private:
    friend class NoGradGuard;
    std::vector<std::function<void()>> rules_;
    std::vector<std::shared_ptr<detail::TensorImpl>> outputs_;
    int recording_depth_ = 0;
};

// Disables tape recording in scope (evaluation, mask construction).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Seeds d(loss)/d(loss) = 1 and replays the active tape in reverse, leaving
// accumulated gradients on every tracked tensor reachable from the loss.
void backward(const Tensor& loss);

// Per-channel batch normalization state for [N,C,T,V] activations.
struct BatchNormState {
    Tensor gamma;  // [C], learnable
    Tensor beta;   // [C], learnable
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double eps = 1e-5;
    double momentum = 0.1;

    static BatchNormState make(int channels);
    int channels() const { return static_cast<int>(running_mean.size()); }
};

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);

// Contraction of the trailing joint axis: out[r,j] = sum_i x[r,i] * b[i,j]
// with r ranging over all leading axes. Equivalent to reshape + matmul.
Tensor joint_contract(const Tensor& x, const Tensor& b);

// joint_contract(x, gate o importance) in one op, skipping the gate's
// zeros. gate must be a constant (untracked); adjacency partitions are
// mostly zero, so this carries the gradient to `importance` at a fraction
// of the dense cost.
Tensor masked_contract(const Tensor& x, const Tensor& gate, const Tensor& importance);

// Convolution along the temporal axis of [N,C,T,V] with weight [C',C,L,1],
// zero padding (L-1)/2 so T' = ceil(T/stride). Joint axis untouched.
// bias may be undefined.
Tensor temporal_conv(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride);

Tensor batch_norm(const Tensor& x, BatchNormState& state, bool training);

Tensor relu(const Tensor& x);
Tensor softmax(const Tensor& x, int axis);
Tensor global_avg_pool(const Tensor& x);  // [N,C,T,V] -> [N,C]
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);  // [N,C,...] + [C]

Tensor concat(std::span<const Tensor> parts, int axis);
Tensor slice(const Tensor& x, int axis, int start, int length);
Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<int>& axes);
Tensor mean_axis(const Tensor& x, int axis);
Tensor sum(const Tensor& x);  // scalar

// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);  // [N,Ci]x[K,Ci]+[K]

}  // namespace ops

}  // namespace ragcn
