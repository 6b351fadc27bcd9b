// Central-difference gradient oracle for every layer type, individually and
// composed. Forward passes run in 32-bit floats; the losses feeding the
// finite differences accumulate in 64-bit, h = 1e-3.

#include <cmath>
#include <algorithm>
#include <memory>

#include "doctest.h"
#include "tactsim/layers.hpp"
#include "tactsim/model.hpp"
#include "tactsim/rng.hpp"

using namespace tactsim;

namespace {

constexpr double kStep = 1e-3;
constexpr double kTol = 1e-3;

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

// Scalar functional over a single layer: L = sum_i w_i out_i with fixed
// random weights. Checks parameter gradients and the input gradient.
void check_layer(Layer& layer, const Tensor& input, std::uint64_t seed) {
    Tensor in = input;
    Tensor out;
    layer.forward(in, out, true);

    Tensor weights = [&] {
        Rng rng(seed);
        return random_tensor(out.shape, rng, -1.0, 1.0);
    }();

    auto loss = [&](const Tensor& x) {
        Tensor y;
        layer.forward(x, y, true);
        double acc = 0.0;
        for (std::int64_t i = 0; i < y.size(); ++i)
            acc += static_cast<double>(weights.data[i]) * y.data[i];
        return acc;
    };

    // Analytic pass.
    for (auto& blob : layer.blobs())
        if (blob.grad) std::fill(blob.grad->begin(), blob.grad->end(), 0.0f);
    layer.forward(in, out, true);
    Tensor grad_in;
    layer.backward(in, out, weights, &grad_in);

    auto check_array = [&](std::vector<float>& values, const std::vector<float>& grads,
                           const std::string& label) {
        double max_mag = 1e-12;
        for (float g : grads) max_mag = std::max(max_mag, static_cast<double>(std::fabs(g)));
        const double floor = std::max(1e-6, 1e-2 * max_mag);
        double worst = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const float keep = values[i];
            values[i] = keep + static_cast<float>(kStep);
            const double up = loss(in);
            values[i] = keep - static_cast<float>(kStep);
            const double down = loss(in);
            values[i] = keep;
            const double fd = (up - down) / (2.0 * kStep);
            const double rel =
                std::fabs(fd - grads[i]) / std::max({std::fabs(fd), std::fabs(grads[i]), floor});
            worst = std::max(worst, rel);
        }
        INFO(label, ": worst relative error ", worst);
        CHECK(worst < kTol);
    };

    for (auto& blob : layer.blobs())
        if (blob.trainable) check_array(*blob.value, *blob.grad, std::string(layer.kind()) + "/" + blob.name);
    check_array(in.data, grad_in.data, std::string(layer.kind()) + "/input");
}

}  // namespace

TEST_CASE("gradient oracle per layer") {
    Rng rng(20240818);
    const Tensor input = random_tensor({2, 8, 8, 2}, rng, 0.05, 1.0);

    SUBCASE("conv2d valid") {
        Conv2D layer(2, 3, 3, 1, 0);
        Rng init(11);
        layer.init_params(init);
        check_layer(layer, input, 101);
    }
    SUBCASE("conv2d same-padded") {
        Conv2D layer(2, 3, 3, 1, 1);
        Rng init(12);
        layer.init_params(init);
        check_layer(layer, input, 102);
    }
    SUBCASE("batchnorm") {
        BatchNorm layer(2);
        Rng init(13);
        layer.init_params(init);
        check_layer(layer, input, 103);
    }
    SUBCASE("relu") {
        ReLU layer;
        // Keep inputs away from the kink so the finite difference is clean.
        Rng r(14);
        Tensor in = random_tensor({2, 8, 8, 2}, r, 0.05, 1.0);
        for (auto& v : in.data)
            if (r.uniform() < 0.5) v = -v;
        check_layer(layer, in, 104);
    }
    SUBCASE("maxpool") {
        MaxPool layer(2);
        check_layer(layer, input, 105);
    }
    SUBCASE("avgpool") {
        AvgPool layer(2);
        check_layer(layer, input, 106);
    }
    SUBCASE("flatten") {
        Flatten layer;
        check_layer(layer, input, 107);
    }
    SUBCASE("dense") {
        Dense layer(16, 5);
        Rng init(15);
        layer.init_params(init);
        Rng r(16);
        check_layer(layer, random_tensor({3, 16}, r, -1.0, 1.0), 108);
    }
}

namespace {

ModelSpec probe_spec() {
    ModelSpec spec;
    spec.name = "grad-probe";
    spec.input_shape = {8, 8, 2};
    auto add = [&](LayerSpec l) { spec.layers.push_back(l); };
    LayerSpec l;
    l.kind = LayerSpec::Kind::conv2d;
    l.out_channels = 3;
    l.kernel = 3;
    l.stride = 1;
    l.padding = 0;
    add(l);  // -> 6x6x3
    add({LayerSpec::Kind::batchnorm, 0, 0, 1, 0, 0, 0});
    add({LayerSpec::Kind::relu, 0, 0, 1, 0, 0, 0});
    add({LayerSpec::Kind::maxpool, 0, 0, 1, 0, 2, 0});  // -> 3x3x3
    l.out_channels = 4;
    l.padding = 1;
    add(l);  // -> 3x3x4
    add({LayerSpec::Kind::batchnorm, 0, 0, 1, 0, 0, 0});
    add({LayerSpec::Kind::relu, 0, 0, 1, 0, 0, 0});
    add({LayerSpec::Kind::avgpool, 0, 0, 1, 0, 3, 0});  // -> 1x1x4
    add({LayerSpec::Kind::flatten, 0, 0, 1, 0, 0, 0});
    add({LayerSpec::Kind::dense, 0, 0, 1, 0, 0, 3});
    return spec;
}

}  // namespace

TEST_CASE("gradient oracle for the composed probe model") {
    Model model(probe_spec(), 20240819);
    Rng rng(5);
    const Tensor input = random_tensor({2, 8, 8, 2}, rng, 0.05, 1.0);
    const Tensor targets = random_tensor({2, 3}, rng, -0.5, 0.5);

    model.forward(input, true);
    model.zero_grad();
    model.backward_mse(targets);

    auto loss = [&](void) {
        const Tensor& pred = model.forward(input, true);
        double acc = 0.0;
        for (std::int64_t i = 0; i < pred.size(); ++i) {
            const double d = static_cast<double>(pred.data[i]) - targets.data[i];
            acc += d * d;
        }
        return acc / static_cast<double>(pred.size());
    };

    // Snapshot analytic gradients before the finite-difference sweep mutates
    // any state.
    std::vector<std::vector<float>> grads;
    for (auto& blob : model.blobs()) grads.push_back(blob.grad ? *blob.grad : std::vector<float>{});

    auto blobs = model.blobs();
    double worst = 0.0;
    std::string worst_at;
    for (std::size_t b = 0; b < blobs.size(); ++b) {
        if (!blobs[b].trainable) continue;
        auto& values = *blobs[b].value;
        double max_mag = 1e-12;
        for (float g : grads[b]) max_mag = std::max(max_mag, static_cast<double>(std::fabs(g)));
        const double floor = std::max(1e-6, 1e-2 * max_mag);
        for (std::size_t i = 0; i < values.size(); ++i) {
            const float keep = values[i];
            values[i] = keep + static_cast<float>(kStep);
            const double up = loss();
            values[i] = keep - static_cast<float>(kStep);
            const double down = loss();
            values[i] = keep;
            const double fd = (up - down) / (2.0 * kStep);
            const double rel = std::fabs(fd - grads[b][i]) /
                               std::max({std::fabs(fd), std::fabs(grads[b][i]), floor});
            if (rel > worst) {
                worst = rel;
                worst_at = blobs[b].name + "[" + std::to_string(i) + "]";
            }
        }
    }
    INFO("worst ", worst, " at ", worst_at);
    CHECK(worst < kTol);
}

TEST_CASE("gradient algebra sanity") {
    Model model(probe_spec(), 77);
    Rng rng(6);
    const Tensor input = random_tensor({2, 8, 8, 2}, rng, 0.05, 1.0);

    SUBCASE("perfect predictions give (near) zero gradients") {
        const Tensor pred = model.forward(input, true);
        Tensor targets = pred;  // exact hit
        model.forward(input, true);
        model.zero_grad();
        const double loss = model.backward_mse(targets);
        CHECK(loss == 0.0);
        for (auto& blob : model.blobs()) {
            if (!blob.trainable) continue;
            for (float g : *blob.grad) CHECK(std::fabs(g) < 1e-6);
        }
    }

    SUBCASE("doubling the error doubles every gradient") {
        const Tensor pred = model.forward(input, true);
        Tensor t1({2, 3}), t2({2, 3});
        Rng r(8);
        for (int i = 0; i < 6; ++i) {
            const float offset = static_cast<float>(r.uniform(0.05, 0.3));
            t1.data[i] = pred.data[i] - offset;
            t2.data[i] = pred.data[i] - 2.0f * offset;
        }
        model.forward(input, true);
        model.zero_grad();
        model.backward_mse(t1);
        std::vector<std::vector<float>> g1;
        for (auto& blob : model.blobs()) g1.push_back(blob.grad ? *blob.grad : std::vector<float>{});

        model.forward(input, true);
        model.zero_grad();
        model.backward_mse(t2);
        auto blobs = model.blobs();
        for (std::size_t b = 0; b < blobs.size(); ++b) {
            if (!blobs[b].trainable) continue;
            for (std::size_t i = 0; i < g1[b].size(); ++i)
                CHECK((*blobs[b].grad)[i] == doctest::Approx(2.0f * g1[b][i]).epsilon(2e-4));
        }
    }
}
