#pragma once

#include "vedicthg/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

namespace vthg {

// PNG decode converts to the requested layout (gray/alpha are expanded or
// flattened as needed). Throws Error(input) on unreadable files.
RgbImage read_png_rgb(const std::filesystem::path& path);
RgbaImage read_png_rgba(const std::filesystem::path& path);
GrayImage read_png_gray(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const RgbaImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

std::vector<std::uint8_t> encode_png(const RgbImage& image);

enum class Y4mChroma { c444, c420 };

// Uncompressed YUV4MPEG2 stream, BT.601 limited range, progressive.
class Y4mWriter {
public:
    Y4mWriter(std::ostream& out, int width, int height, double frame_rate_hz,
              Y4mChroma chroma = Y4mChroma::c444);

    void write_frame(const RgbImage& frame);
    std::size_t frames_written() const noexcept { return frames_; }

private:
    std::ostream& out_;
    int width_;
    int height_;
    Y4mChroma chroma_;
    std::size_t frames_ = 0;
    std::vector<std::uint8_t> y_, u_, v_;
};

// "30:1" for integral rates, otherwise a /1000 or /1001 rational.
std::pair<long, long> y4m_frame_rate(double frame_rate_hz);

}  // namespace vthg
