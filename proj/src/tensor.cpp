#include "tactsim/tensor.hpp"

namespace tactsim {

Tensor rescale(const Sample& sample) {
    sample.validate();
    Tensor t({Sample::kSide, Sample::kSide, Sample::kChannels});
    const int side = Sample::kSide;
    for (int c = 0; c < Sample::kChannels; ++c)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                t.data[(static_cast<std::size_t>(y) * side + x) * Sample::kChannels + c] =
                    static_cast<float>(sample.at(c, y, x)) / 255.0f;
    return t;
}

Tensor make_batch(const std::vector<Sample>& samples, const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("batch: no samples selected");
    const int side = Sample::kSide, ch = Sample::kChannels;
    Tensor t({static_cast<int>(indices.size()), side, side, ch});
    const std::size_t stride = static_cast<std::size_t>(side) * side * ch;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Sample& s = samples.at(indices[i]);
        float* dst = t.data.data() + i * stride;
        for (int c = 0; c < ch; ++c)
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x)
                    dst[(static_cast<std::size_t>(y) * side + x) * ch + c] =
                        static_cast<float>(s.at(c, y, x)) / 255.0f;
    }
    return t;
}

Tensor make_targets(const std::vector<Sample>& samples, const std::vector<int>& indices,
                    double scale_xy_mm, double scale_z_mm) {
    if (scale_xy_mm <= 0 || scale_z_mm <= 0)
        throw std::invalid_argument("targets: label scales must be positive");
    Tensor t({static_cast<int>(indices.size()), 3});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Sample& s = samples.at(indices[i]);
        t.data[i * 3 + 0] = static_cast<float>(s.label_x_mm / scale_xy_mm);
        t.data[i * 3 + 1] = static_cast<float>(s.label_y_mm / scale_xy_mm);
        t.data[i * 3 + 2] = static_cast<float>(s.label_z_mm / scale_z_mm);
    }
    return t;
}

}  // namespace tactsim
