#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "depthhead/nn.hpp"

namespace depthhead {

// Model file, format version 1:
//   "DHDM" | u32 version | u32 input_h | u32 input_w | u32 input_c
//   u32 layer_count | per layer: u32 kind, 4 x i32 (meaning depends on kind)
//   then, for each parameterized layer in order, its weight and bias blobs
//   as little-endian 32-bit floats.
// All integers are little-endian. Loading validates the magic, the version,
// the layer table (by rebuilding the network and checking shapes) and the
// exact stream length.

class ModelLoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_i32(std::string& out, std::int32_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
}

inline void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class ByteReader {
public:
    ByteReader(const std::string& bytes) : data_(bytes) {}

    std::uint32_t u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    void raw(char* dst, std::size_t n) {
        require(n);
        std::memcpy(dst, data_.data() + pos_, n);
        pos_ += n;
    }
    bool exhausted() const { return pos_ == data_.size(); }

private:
    void require(std::size_t n) {
        if (pos_ + n > data_.size())
            throw ModelLoadError("model stream truncated at byte " + std::to_string(data_.size()));
    }
    const std::string& data_;
    std::size_t pos_ = 0;
};

}  // namespace detail

constexpr char kModelMagic[4] = {'D', 'H', 'D', 'M'};
constexpr std::uint32_t kModelVersion = 1;

inline std::string save_model(const Network<float>& net) {
    std::string out;
    out.append(kModelMagic, 4);
    detail::put_u32(out, kModelVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(net.input_h()));
    detail::put_u32(out, static_cast<std::uint32_t>(net.input_w()));
    detail::put_u32(out, static_cast<std::uint32_t>(net.input_c()));
    detail::put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
    for (const LayerDesc& d : net.layers()) {
        detail::put_u32(out, static_cast<std::uint32_t>(d.kind));
        detail::put_i32(out, d.in_ch != 0 ? d.in_ch : d.in_dim);
        detail::put_i32(out, d.out_ch != 0 ? d.out_ch : d.out_dim);
        detail::put_i32(out, d.kernel);
        detail::put_i32(out, d.pool);
    }
    for (const auto& p : net.params()) {
        for (const float v : p.w.v) detail::put_f32(out, v);
        for (const float v : p.b.v) detail::put_f32(out, v);
    }
    return out;
}

inline Network<float> load_model(const std::string& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
        throw ModelLoadError("not a model file (bad magic)");
    detail::ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    const std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw ModelLoadError("unsupported model version " + std::to_string(version));
    const int in_h = static_cast<int>(r.u32());
    const int in_w = static_cast<int>(r.u32());
    const int in_c = static_cast<int>(r.u32());
    const std::uint32_t n_layers = r.u32();
    if (in_h <= 0 || in_w <= 0 || in_c <= 0 || in_h > 1 << 16 || in_w > 1 << 16 || in_c > 1 << 16)
        throw ModelLoadError("implausible input shape in model header");
    if (n_layers == 0 || n_layers > 1024)
        throw ModelLoadError("implausible layer count in model header");

    std::vector<LayerDesc> layers;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const std::uint32_t kind = r.u32();
        const int a = r.i32();
        const int b = r.i32();
        const int kernel = r.i32();
        const int pool = r.i32();
        switch (static_cast<LayerKind>(kind)) {
            case LayerKind::Conv:
                layers.push_back(LayerDesc::conv(a, b, kernel));
                break;
            case LayerKind::MaxPool:
                layers.push_back(LayerDesc::max_pool(pool));
                break;
            case LayerKind::Tanh:
                layers.push_back(LayerDesc::tanh());
                break;
            case LayerKind::Flatten:
                layers.push_back(LayerDesc::flatten());
                break;
            case LayerKind::Dense:
                layers.push_back(LayerDesc::dense(a, b));
                break;
            case LayerKind::Softmax:
                layers.push_back(LayerDesc::softmax());
                break;
            default:
                throw ModelLoadError("unknown layer kind " + std::to_string(kind));
        }
    }

    // Rebuilding the network re-derives every activation shape; a header
    // whose declared input shape is inconsistent with the layer table fails
    // here with the constructor's shape diagnostic.
    Network<float> net = [&] {
        try {
            return Network<float>(in_h, in_w, in_c, layers);
        } catch (const std::invalid_argument& e) {
            throw ModelLoadError(std::string("model shape error: ") + e.what());
        }
    }();

    for (auto& p : net.params()) {
        for (float& v : p.w.v) v = r.f32();
        for (float& v : p.b.v) v = r.f32();
    }
    if (!r.exhausted()) throw ModelLoadError("trailing bytes after model parameters");
    return net;
}

inline void save_model_file(const std::string& path, const Network<float>& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot create model file: " + path);
    const std::string bytes = save_model(net);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("model write failed: " + path);
}

inline Network<float> load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return load_model(buf.str());
    } catch (const ModelLoadError& e) {
        throw ModelLoadError(path + ": " + e.what());
    }
}

}  // namespace depthhead
