#include "tactsim/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "tactsim/gemm.hpp"

namespace tactsim {

namespace {

void check_rank(const std::vector<int>& in, std::size_t rank, const char* who) {
    if (in.size() != rank)
        throw std::invalid_argument(std::string(who) + ": unexpected input rank");
}

int batch_of(const Tensor& t) { return t.dim(0); }

}  // namespace

// ============================================================================
// Conv2D
// ============================================================================

Conv2D::Conv2D(int in_channels, int out_channels, int kernel, int stride, int padding)
    : in_c_(in_channels), out_c_(out_channels), kernel_(kernel), stride_(stride), pad_(padding) {
    if (in_c_ <= 0 || out_c_ <= 0 || kernel_ <= 0 || stride_ <= 0 || pad_ < 0)
        throw std::invalid_argument("conv: bad construction parameters");
    if (kernel_ % 2 == 0) throw std::invalid_argument("conv: kernel must be odd");
    const std::size_t wsize =
        static_cast<std::size_t>(kernel_) * kernel_ * in_c_ * out_c_;
    weight_.assign(wsize, 0.0f);
    bias_.assign(out_c_, 0.0f);
    grad_weight_.assign(wsize, 0.0f);
    grad_bias_.assign(out_c_, 0.0f);
}

std::vector<int> Conv2D::output_shape(const std::vector<int>& in) const {
    check_rank(in, 3, "conv");
    if (in[2] != in_c_) throw std::invalid_argument("conv: channel mismatch");
    const int ho = (in[0] + 2 * pad_ - kernel_) / stride_ + 1;
    const int wo = (in[1] + 2 * pad_ - kernel_) / stride_ + 1;
    if (ho <= 0 || wo <= 0) throw std::invalid_argument("conv: output collapses to zero");
    return {ho, wo, out_c_};
}

void Conv2D::im2col(const float* src, int h, int w, float* dst) const {
    const int ho = (h + 2 * pad_ - kernel_) / stride_ + 1;
    const int wo = (w + 2 * pad_ - kernel_) / stride_ + 1;
    float* out = dst;
    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            for (int ky = 0; ky < kernel_; ++ky) {
                const int sy = oy * stride_ - pad_ + ky;
                for (int kx = 0; kx < kernel_; ++kx) {
                    const int sx = ox * stride_ - pad_ + kx;
                    if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                        std::memset(out, 0, sizeof(float) * in_c_);
                    } else {
                        std::memcpy(out, src + (static_cast<std::size_t>(sy) * w + sx) * in_c_,
                                    sizeof(float) * in_c_);
                    }
                    out += in_c_;
                }
            }
        }
    }
}

void Conv2D::col2im_add(const float* src, int h, int w, float* dst) const {
    const int ho = (h + 2 * pad_ - kernel_) / stride_ + 1;
    const int wo = (w + 2 * pad_ - kernel_) / stride_ + 1;
    const float* in = src;
    for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
            for (int ky = 0; ky < kernel_; ++ky) {
                const int sy = oy * stride_ - pad_ + ky;
                for (int kx = 0; kx < kernel_; ++kx) {
                    const int sx = ox * stride_ - pad_ + kx;
                    if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
                        float* d = dst + (static_cast<std::size_t>(sy) * w + sx) * in_c_;
                        for (int c = 0; c < in_c_; ++c) d[c] += in[c];
                    }
                    in += in_c_;
                }
            }
        }
    }
}

void Conv2D::forward(const Tensor& in, Tensor& out, bool) {
    const int n = batch_of(in);
    const int h = in.dim(1), w = in.dim(2);
    const auto os = output_shape({h, w, in.dim(3)});
    const int ho = os[0], wo = os[1];
    const int m = ho * wo;
    const int k = kernel_ * kernel_ * in_c_;

    out = Tensor({n, ho, wo, out_c_});
    col_.resize(static_cast<std::size_t>(m) * k);
    const std::size_t in_stride = static_cast<std::size_t>(h) * w * in_c_;
    const std::size_t out_stride = static_cast<std::size_t>(m) * out_c_;

    for (int s = 0; s < n; ++s) {
        im2col(in.data.data() + s * in_stride, h, w, col_.data());
        float* dst = out.data.data() + s * out_stride;
        sgemm(m, out_c_, k, col_.data(), k, weight_.data(), out_c_, dst, out_c_, false);
        for (int i = 0; i < m; ++i)
            for (int c = 0; c < out_c_; ++c) dst[static_cast<std::size_t>(i) * out_c_ + c] += bias_[c];
    }
}

void Conv2D::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                      Tensor* grad_in) {
    const int n = batch_of(in);
    const int h = in.dim(1), w = in.dim(2);
    const int ho = out.dim(1), wo = out.dim(2);
    const int m = ho * wo;
    const int k = kernel_ * kernel_ * in_c_;

    col_.resize(static_cast<std::size_t>(m) * k);
    col_t_.resize(static_cast<std::size_t>(m) * k);
    const std::size_t in_stride = static_cast<std::size_t>(h) * w * in_c_;
    const std::size_t out_stride = static_cast<std::size_t>(m) * out_c_;

    if (grad_in) {
        *grad_in = Tensor({n, h, w, in_c_});
        weight_t_.resize(static_cast<std::size_t>(k) * out_c_);
        transpose(weight_.data(), k, out_c_, weight_t_.data());
        dcol_.resize(static_cast<std::size_t>(m) * k);
    }

    for (int s = 0; s < n; ++s) {
        const float* g = grad_out.data.data() + s * out_stride;

        // Bias: column sums of the output gradient.
        for (int i = 0; i < m; ++i)
            for (int c = 0; c < out_c_; ++c) grad_bias_[c] += g[static_cast<std::size_t>(i) * out_c_ + c];

        // Weights: col(x)^T * g, accumulated across the batch.
        im2col(in.data.data() + s * in_stride, h, w, col_.data());
        transpose(col_.data(), m, k, col_t_.data());
        sgemm(k, out_c_, m, col_t_.data(), m, g, out_c_, grad_weight_.data(), out_c_, true);

        if (grad_in) {
            // Input: g * W^T scattered back through the patches.
            sgemm(m, k, out_c_, g, out_c_, weight_t_.data(), k, dcol_.data(), k, false);
            col2im_add(dcol_.data(), h, w, grad_in->data.data() + s * in_stride);
        }
    }
}

std::vector<ParamBlob> Conv2D::blobs() {
    return {{"weight", &weight_, &grad_weight_, true}, {"bias", &bias_, &grad_bias_, true}};
}

void Conv2D::init_params(Rng& rng) {
    const double fan_in = static_cast<double>(kernel_) * kernel_ * in_c_;
    const double limit = std::sqrt(6.0 / fan_in);
    for (float& v : weight_) v = static_cast<float>(rng.uniform(-limit, limit));
    std::fill(bias_.begin(), bias_.end(), 0.0f);
}

// ============================================================================
// BatchNorm
// ============================================================================

BatchNorm::BatchNorm(int channels, double epsilon, double momentum)
    : channels_(channels), eps_(epsilon), momentum_(momentum) {
    gamma_.assign(channels_, 1.0f);
    beta_.assign(channels_, 0.0f);
    running_mean_.assign(channels_, 0.0f);
    running_var_.assign(channels_, 1.0f);
    grad_gamma_.assign(channels_, 0.0f);
    grad_beta_.assign(channels_, 0.0f);
    batch_mean_.assign(channels_, 0.0f);
    batch_invstd_.assign(channels_, 0.0f);
}

std::vector<int> BatchNorm::output_shape(const std::vector<int>& in) const {
    if (in.empty() || in.back() != channels_)
        throw std::invalid_argument("batchnorm: channel mismatch");
    return in;
}

void BatchNorm::forward(const Tensor& in, Tensor& out, bool training) {
    const std::int64_t total = in.size();
    const std::int64_t rows = total / channels_;
    out = Tensor(in.shape);

    if (training) {
        // Batch statistics, accumulated in double for stability.
        std::vector<double> sum(channels_, 0.0), sumsq(channels_, 0.0);
        const float* p = in.data.data();
        for (std::int64_t r = 0; r < rows; ++r, p += channels_)
            for (int c = 0; c < channels_; ++c) {
                sum[c] += p[c];
                sumsq[c] += static_cast<double>(p[c]) * p[c];
            }
        for (int c = 0; c < channels_; ++c) {
            const double mean = sum[c] / static_cast<double>(rows);
            const double var = std::max(0.0, sumsq[c] / static_cast<double>(rows) - mean * mean);
            batch_mean_[c] = static_cast<float>(mean);
            batch_invstd_[c] = static_cast<float>(1.0 / std::sqrt(var + eps_));
            running_mean_[c] =
                static_cast<float>(momentum_ * running_mean_[c] + (1.0 - momentum_) * mean);
            running_var_[c] =
                static_cast<float>(momentum_ * running_var_[c] + (1.0 - momentum_) * var);
        }
        saw_training_forward_ = true;
        const float* src = in.data.data();
        float* dst = out.data.data();
        for (std::int64_t r = 0; r < rows; ++r, src += channels_, dst += channels_)
            for (int c = 0; c < channels_; ++c)
                dst[c] = gamma_[c] * (src[c] - batch_mean_[c]) * batch_invstd_[c] + beta_[c];
    } else {
        std::vector<float> scale(channels_), shift(channels_);
        for (int c = 0; c < channels_; ++c) {
            scale[c] = static_cast<float>(gamma_[c] / std::sqrt(running_var_[c] + eps_));
            shift[c] = beta_[c] - scale[c] * running_mean_[c];
        }
        const float* src = in.data.data();
        float* dst = out.data.data();
        for (std::int64_t r = 0; r < rows; ++r, src += channels_, dst += channels_)
            for (int c = 0; c < channels_; ++c) dst[c] = scale[c] * src[c] + shift[c];
    }
}

void BatchNorm::backward(const Tensor& in, const Tensor&, const Tensor& grad_out,
                         Tensor* grad_in) {
    if (!saw_training_forward_)
        throw std::logic_error("batchnorm: backward called before a training forward");
    const std::int64_t rows = in.size() / channels_;

    std::vector<double> sum_g(channels_, 0.0), sum_gx(channels_, 0.0);
    {
        const float* g = grad_out.data.data();
        const float* x = in.data.data();
        for (std::int64_t r = 0; r < rows; ++r, g += channels_, x += channels_)
            for (int c = 0; c < channels_; ++c) {
                const double xhat = (x[c] - batch_mean_[c]) * batch_invstd_[c];
                sum_g[c] += g[c];
                sum_gx[c] += g[c] * xhat;
            }
    }
    for (int c = 0; c < channels_; ++c) {
        grad_gamma_[c] += static_cast<float>(sum_gx[c]);
        grad_beta_[c] += static_cast<float>(sum_g[c]);
    }

    if (!grad_in) return;
    *grad_in = Tensor(in.shape);
    const double inv_rows = 1.0 / static_cast<double>(rows);
    const float* g = grad_out.data.data();
    const float* x = in.data.data();
    float* gi = grad_in->data.data();
    for (std::int64_t r = 0; r < rows; ++r, g += channels_, x += channels_, gi += channels_)
        for (int c = 0; c < channels_; ++c) {
            const double xhat = (x[c] - batch_mean_[c]) * batch_invstd_[c];
            gi[c] = static_cast<float>(gamma_[c] * batch_invstd_[c] *
                                       (g[c] - inv_rows * (sum_g[c] + xhat * sum_gx[c])));
        }
}

std::vector<ParamBlob> BatchNorm::blobs() {
    return {{"gamma", &gamma_, &grad_gamma_, true},
            {"beta", &beta_, &grad_beta_, true},
            {"running_mean", &running_mean_, nullptr, false},
            {"running_var", &running_var_, nullptr, false}};
}

void BatchNorm::init_params(Rng&) {
    std::fill(gamma_.begin(), gamma_.end(), 1.0f);
    std::fill(beta_.begin(), beta_.end(), 0.0f);
    std::fill(running_mean_.begin(), running_mean_.end(), 0.0f);
    std::fill(running_var_.begin(), running_var_.end(), 1.0f);
}

// ============================================================================
// ReLU, pooling, flatten
// ============================================================================

void ReLU::forward(const Tensor& in, Tensor& out, bool) {
    out = Tensor(in.shape);
    for (std::int64_t i = 0; i < in.size(); ++i) out.data[i] = std::max(0.0f, in.data[i]);
}

void ReLU::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor* grad_in) {
    if (!grad_in) return;
    *grad_in = Tensor(in.shape);
    for (std::int64_t i = 0; i < in.size(); ++i)
        grad_in->data[i] = in.data[i] > 0.0f ? grad_out.data[i] : 0.0f;
}

std::vector<int> MaxPool::output_shape(const std::vector<int>& in) const {
    check_rank(in, 3, "maxpool");
    const int ho = in[0] / k_, wo = in[1] / k_;
    if (ho <= 0 || wo <= 0) throw std::invalid_argument("maxpool: output collapses to zero");
    return {ho, wo, in[2]};
}

void MaxPool::forward(const Tensor& in, Tensor& out, bool) {
    const int n = batch_of(in), h = in.dim(1), w = in.dim(2), c = in.dim(3);
    const int ho = h / k_, wo = w / k_;
    out = Tensor({n, ho, wo, c});
    argmax_.resize(out.data.size());

    for (int s = 0; s < n; ++s) {
        const float* src = in.data.data() + static_cast<std::size_t>(s) * h * w * c;
        float* dst = out.data.data() + static_cast<std::size_t>(s) * ho * wo * c;
        std::int32_t* am = argmax_.data() + static_cast<std::size_t>(s) * ho * wo * c;
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox)
                for (int ch = 0; ch < c; ++ch) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::int32_t best_at = 0;
                    for (int ky = 0; ky < k_; ++ky)
                        for (int kx = 0; kx < k_; ++kx) {
                            const std::int32_t idx =
                                ((oy * k_ + ky) * w + (ox * k_ + kx)) * c + ch;
                            if (src[idx] > best) {
                                best = src[idx];
                                best_at = idx;
                            }
                        }
                    dst[(static_cast<std::size_t>(oy) * wo + ox) * c + ch] = best;
                    am[(static_cast<std::size_t>(oy) * wo + ox) * c + ch] = best_at;
                }
    }
}

void MaxPool::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                       Tensor* grad_in) {
    if (!grad_in) return;
    *grad_in = Tensor(in.shape);
    const int n = batch_of(in);
    const std::size_t in_stride = in.data.size() / n;
    const std::size_t out_stride = out.data.size() / n;
    for (int s = 0; s < n; ++s) {
        const float* g = grad_out.data.data() + s * out_stride;
        const std::int32_t* am = argmax_.data() + s * out_stride;
        float* gi = grad_in->data.data() + s * in_stride;
        for (std::size_t i = 0; i < out_stride; ++i) gi[am[i]] += g[i];
    }
}

std::vector<int> AvgPool::output_shape(const std::vector<int>& in) const {
    check_rank(in, 3, "avgpool");
    const int ho = in[0] / k_, wo = in[1] / k_;
    if (ho <= 0 || wo <= 0) throw std::invalid_argument("avgpool: output collapses to zero");
    return {ho, wo, in[2]};
}

void AvgPool::forward(const Tensor& in, Tensor& out, bool) {
    const int n = batch_of(in), h = in.dim(1), w = in.dim(2), c = in.dim(3);
    const int ho = h / k_, wo = w / k_;
    out = Tensor({n, ho, wo, c});
    const float inv = 1.0f / (k_ * k_);
    for (int s = 0; s < n; ++s) {
        const float* src = in.data.data() + static_cast<std::size_t>(s) * h * w * c;
        float* dst = out.data.data() + static_cast<std::size_t>(s) * ho * wo * c;
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox)
                for (int ch = 0; ch < c; ++ch) {
                    float acc = 0.0f;
                    for (int ky = 0; ky < k_; ++ky)
                        for (int kx = 0; kx < k_; ++kx)
                            acc += src[((oy * k_ + ky) * w + (ox * k_ + kx)) * c + ch];
                    dst[(static_cast<std::size_t>(oy) * wo + ox) * c + ch] = acc * inv;
                }
    }
}

void AvgPool::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                       Tensor* grad_in) {
    if (!grad_in) return;
    *grad_in = Tensor(in.shape);
    const int n = batch_of(in), h = in.dim(1), w = in.dim(2), c = in.dim(3);
    const int ho = out.dim(1), wo = out.dim(2);
    const float inv = 1.0f / (k_ * k_);
    for (int s = 0; s < n; ++s) {
        const float* g = grad_out.data.data() + static_cast<std::size_t>(s) * ho * wo * c;
        float* gi = grad_in->data.data() + static_cast<std::size_t>(s) * h * w * c;
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox)
                for (int ch = 0; ch < c; ++ch) {
                    const float v = g[(static_cast<std::size_t>(oy) * wo + ox) * c + ch] * inv;
                    for (int ky = 0; ky < k_; ++ky)
                        for (int kx = 0; kx < k_; ++kx)
                            gi[((oy * k_ + ky) * w + (ox * k_ + kx)) * c + ch] += v;
                }
    }
}

std::vector<int> Flatten::output_shape(const std::vector<int>& in) const {
    int total = 1;
    for (int d : in) total *= d;
    return {total};
}

void Flatten::forward(const Tensor& in, Tensor& out, bool) {
    out = in;
    const int n = batch_of(in);
    out.shape = {n, static_cast<int>(in.size() / n)};
}

void Flatten::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor* grad_in) {
    if (!grad_in) return;
    *grad_in = grad_out;
    grad_in->shape = in.shape;
}

// ============================================================================
// Dense
// ============================================================================

Dense::Dense(int in_features, int out_features) : in_f_(in_features), out_f_(out_features) {
    weight_.assign(static_cast<std::size_t>(in_f_) * out_f_, 0.0f);
    bias_.assign(out_f_, 0.0f);
    grad_weight_.assign(weight_.size(), 0.0f);
    grad_bias_.assign(out_f_, 0.0f);
}

std::vector<int> Dense::output_shape(const std::vector<int>& in) const {
    check_rank(in, 1, "dense");
    if (in[0] != in_f_) throw std::invalid_argument("dense: feature mismatch");
    return {out_f_};
}

void Dense::forward(const Tensor& in, Tensor& out, bool) {
    const int n = batch_of(in);
    out = Tensor({n, out_f_});
    sgemm(n, out_f_, in_f_, in.data.data(), in_f_, weight_.data(), out_f_, out.data.data(), out_f_,
          false);
    for (int s = 0; s < n; ++s)
        for (int c = 0; c < out_f_; ++c) out.data[static_cast<std::size_t>(s) * out_f_ + c] += bias_[c];
}

void Dense::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor* grad_in) {
    const int n = batch_of(in);

    for (int s = 0; s < n; ++s)
        for (int c = 0; c < out_f_; ++c)
            grad_bias_[c] += grad_out.data[static_cast<std::size_t>(s) * out_f_ + c];

    input_t_.resize(static_cast<std::size_t>(in_f_) * n);
    transpose(in.data.data(), n, in_f_, input_t_.data());
    sgemm(in_f_, out_f_, n, input_t_.data(), n, grad_out.data.data(), out_f_, grad_weight_.data(),
          out_f_, true);

    if (!grad_in) return;
    *grad_in = Tensor({n, in_f_});
    weight_t_.resize(weight_.size());
    transpose(weight_.data(), in_f_, out_f_, weight_t_.data());
    sgemm(n, in_f_, out_f_, grad_out.data.data(), out_f_, weight_t_.data(), in_f_,
          grad_in->data.data(), in_f_, false);
}

std::vector<ParamBlob> Dense::blobs() {
    return {{"weight", &weight_, &grad_weight_, true}, {"bias", &bias_, &grad_bias_, true}};
}

void Dense::init_params(Rng& rng) {
    const double limit = std::sqrt(6.0 / in_f_);
    for (float& v : weight_) v = static_cast<float>(rng.uniform(-limit, limit));
    std::fill(bias_.begin(), bias_.end(), 0.0f);
}

}  // namespace tactsim
