#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tactsim/rng.hpp"
#include "tactsim/tensor.hpp"

namespace tactsim {

/// Named parameter (or state) array of a layer. Trainable blobs carry a
/// gradient buffer of the same size; running statistics do not.
struct ParamBlob {
    std::string name;
    std::vector<float>* value = nullptr;
    std::vector<float>* grad = nullptr;
    bool trainable = false;
};

/// One stage of the network. Layers are stateless with respect to
/// activations: the model passes input/output tensors back in for backward.
/// Internal caches (batch statistics, pooling argmax) are filled by forward
/// and consumed by the matching backward call.
class Layer {
public:
    virtual ~Layer() = default;
    virtual const char* kind() const = 0;

    /// Per-sample output shape (no batch dimension). Throws on mismatch.
    virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;

    virtual void forward(const Tensor& in, Tensor& out, bool training) = 0;

    /// grad_in may be skipped for the first layer (need_input_grad = false).
    /// Parameter gradients accumulate; call zero_grad between batches.
    virtual void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                          Tensor* grad_in) = 0;

    virtual std::vector<ParamBlob> blobs() { return {}; }
    virtual void init_params(Rng&) {}
};

class Conv2D : public Layer {
public:
    Conv2D(int in_channels, int out_channels, int kernel, int stride, int padding);
    const char* kind() const override { return "conv2d"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    void forward(const Tensor& in, Tensor& out, bool training) override;
    void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  Tensor* grad_in) override;
    std::vector<ParamBlob> blobs() override;
    void init_params(Rng& rng) override;

private:
    void im2col(const float* src, int h, int w, float* dst) const;
    void col2im_add(const float* src, int h, int w, float* dst) const;

    int in_c_, out_c_, kernel_, stride_, pad_;
    std::vector<float> weight_;  // [ky][kx][in_c][out_c]
    std::vector<float> bias_;
    std::vector<float> grad_weight_, grad_bias_;
    std::vector<float> col_, col_t_, weight_t_, dcol_;  // scratch
};

class BatchNorm : public Layer {
public:
    explicit BatchNorm(int channels, double epsilon = 1e-5, double momentum = 0.9);
    const char* kind() const override { return "batchnorm"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    void forward(const Tensor& in, Tensor& out, bool training) override;
    void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  Tensor* grad_in) override;
    std::vector<ParamBlob> blobs() override;
    void init_params(Rng&) override;

private:
    int channels_;
    double eps_, momentum_;
    std::vector<float> gamma_, beta_, running_mean_, running_var_;
    std::vector<float> grad_gamma_, grad_beta_;
    std::vector<float> batch_mean_, batch_invstd_;  // cached by training forward
    bool saw_training_forward_ = false;
};

class ReLU : public Layer {
public:
    const char* kind() const override { return "relu"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    void forward(const Tensor& in, Tensor& out, bool training) override;
    void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  Tensor* grad_in) override;
};

class MaxPool : public Layer {
public:
    explicit MaxPool(int k) : k_(k) {}
    const char* kind() const override { return "maxpool"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    void forward(const Tensor& in, Tensor& out, bool training) override;
    void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  Tensor* grad_in) override;

private:
    int k_;
    std::vector<std::int32_t> argmax_;
};

class AvgPool : public Layer {
public:
    explicit AvgPool(int k) : k_(k) {}
    const char* kind() const override { return "avgpool"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    void forward(const Tensor& in, Tensor& out, bool training) override;
    void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  Tensor* grad_in) override;

private:
    int k_;
};

class Flatten : public Layer {
public:
    const char* kind() const override { return "flatten"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    void forward(const Tensor& in, Tensor& out, bool training) override;
    void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  Tensor* grad_in) override;
};

class Dense : public Layer {
public:
    Dense(int in_features, int out_features);
    const char* kind() const override { return "dense"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    void forward(const Tensor& in, Tensor& out, bool training) override;
    void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  Tensor* grad_in) override;
    std::vector<ParamBlob> blobs() override;
    void init_params(Rng& rng) override;

private:
    int in_f_, out_f_;
    std::vector<float> weight_;  // [in][out]
    std::vector<float> bias_;
    std::vector<float> grad_weight_, grad_bias_;
    std::vector<float> weight_t_, input_t_;  // scratch
};

}  // namespace tactsim
