#include "vedicthg/image_io.hpp"

#include "vedicthg/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vthg {

namespace {

template <typename Image>
Image read_png_as(const std::filesystem::path& path, png_uint_32 format) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw Error(ErrorKind::input, "cannot read PNG " + path.string() + ": " + img.message);
    }
    img.format = format;
    Image out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.data().data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw Error(ErrorKind::input, "cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

template <typename Image>
void write_png_as(const std::filesystem::path& path, const Image& image, png_uint_32 format) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = format;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.data().data(), 0, nullptr)) {
        throw Error(ErrorKind::pipeline, "cannot write PNG " + path.string() + ": " + img.message);
    }
}

std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

}  // namespace

RgbImage read_png_rgb(const std::filesystem::path& path) {
    return read_png_as<RgbImage>(path, PNG_FORMAT_RGB);
}

RgbaImage read_png_rgba(const std::filesystem::path& path) {
    return read_png_as<RgbaImage>(path, PNG_FORMAT_RGBA);
}

GrayImage read_png_gray(const std::filesystem::path& path) {
    return read_png_as<GrayImage>(path, PNG_FORMAT_GRAY);
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    write_png_as(path, image, PNG_FORMAT_RGB);
}

void write_png(const std::filesystem::path& path, const RgbaImage& image) {
    write_png_as(path, image, PNG_FORMAT_RGBA);
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    write_png_as(path, image, PNG_FORMAT_GRAY);
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.data().data(), 0, nullptr)) {
        throw Error(ErrorKind::pipeline, std::string("PNG encode failed: ") + img.message);
    }
    std::vector<std::uint8_t> buffer(size);
    if (!png_image_write_to_memory(&img, buffer.data(), &size, 0, image.data().data(), 0, nullptr)) {
        throw Error(ErrorKind::pipeline, std::string("PNG encode failed: ") + img.message);
    }
    buffer.resize(size);
    return buffer;
}

std::pair<long, long> y4m_frame_rate(double frame_rate_hz) {
    if (!(frame_rate_hz > 0.0)) {
        throw ConfigError("frame rate must be > 0");
    }
    const double rounded = std::round(frame_rate_hz);
    if (std::abs(frame_rate_hz - rounded) < 1e-9) {
        return {static_cast<long>(rounded), 1};
    }
    const double ntsc = frame_rate_hz * 1.001;
    if (std::abs(ntsc - std::round(ntsc)) < 1e-6) {
        return {static_cast<long>(std::round(ntsc)) * 1000, 1001};
    }
    return {static_cast<long>(std::round(frame_rate_hz * 1000.0)), 1000};
}

Y4mWriter::Y4mWriter(std::ostream& out, int width, int height, double frame_rate_hz, Y4mChroma chroma)
    : out_(out), width_(width), height_(height), chroma_(chroma) {
    if (chroma == Y4mChroma::c420 && (width % 2 != 0 || height % 2 != 0)) {
        throw ConfigError("4:2:0 output needs even frame dimensions");
    }
    const auto [num, den] = y4m_frame_rate(frame_rate_hz);
    out_ << "YUV4MPEG2 W" << width << " H" << height << " F" << num << ':' << den
         << " Ip A1:1 " << (chroma == Y4mChroma::c444 ? "C444" : "C420jpeg") << '\n';
}

void Y4mWriter::write_frame(const RgbImage& frame) {
    if (!frame.same_size(width_, height_)) {
        throw PipelineError("io", "frame size does not match the Y4M stream");
    }
    const std::size_t n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    y_.resize(n);
    std::vector<double> cb(n), cr(n);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            const auto* p = frame.pixel(x, y);
            const double r = p[0], g = p[1], b = p[2];
            const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                                  static_cast<std::size_t>(x);
            y_[i] = clamp_u8(16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0);
            cb[i] = 128.0 + (-37.797 * r - 74.203 * g + 112.0 * b) / 255.0;
            cr[i] = 128.0 + (112.0 * r - 93.786 * g - 18.214 * b) / 255.0;
        }
    }
    if (chroma_ == Y4mChroma::c444) {
        u_.resize(n);
        v_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            u_[i] = clamp_u8(cb[i]);
            v_[i] = clamp_u8(cr[i]);
        }
    } else {
        const int cw = width_ / 2;
        const int ch = height_ / 2;
        u_.resize(static_cast<std::size_t>(cw) * static_cast<std::size_t>(ch));
        v_.resize(u_.size());
        for (int y = 0; y < ch; ++y) {
            for (int x = 0; x < cw; ++x) {
                double su = 0.0;
                double sv = 0.0;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const auto i = static_cast<std::size_t>(2 * y + dy) * static_cast<std::size_t>(width_) +
                                       static_cast<std::size_t>(2 * x + dx);
                        su += cb[i];
                        sv += cr[i];
                    }
                }
                const auto j = static_cast<std::size_t>(y) * static_cast<std::size_t>(cw) + static_cast<std::size_t>(x);
                u_[j] = clamp_u8(su / 4.0);
                v_[j] = clamp_u8(sv / 4.0);
            }
        }
    }
    out_ << "FRAME\n";
    out_.write(reinterpret_cast<const char*>(y_.data()), static_cast<std::streamsize>(y_.size()));
    out_.write(reinterpret_cast<const char*>(u_.data()), static_cast<std::streamsize>(u_.size()));
    out_.write(reinterpret_cast<const char*>(v_.data()), static_cast<std::streamsize>(v_.size()));
    if (!out_) {
        throw PipelineError("io", "Y4M write failed");
    }
    ++frames_;
}

}  // namespace vthg
