// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/video.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>

#include "recam/error.hpp"

namespace recam {

VideoClip::VideoClip(int frames, int height, int width, float fill)
    : frames_(frames), height_(height), width_(width) {
    if (frames <= 0 || height <= 0 || width <= 0) {
        fail(ErrorKind::InvalidParams, fmt::format("bad clip dims {}x3x{}x{}", frames, height, width));
    }
    data_.assign(static_cast<std::size_t>(frames) * 3 * height * width, fill);
}

void VideoClip::clamp01() {
    for (float& v : data_) v = std::clamp(v, 0.0f, 1.0f);
}

void validate_clip(const VideoClip& clip) {
    for (float v : clip.data()) {
        if (!(v >= 0.0f && v <= 1.0f)) fail(ErrorKind::InvalidParams, "clip value outside [0, 1]");
    }
}

double clip_mse(const VideoClip& a, const VideoClip& b) {
    if (!a.same_shape(b)) fail(ErrorKind::InvalidParams, "clip dimensions differ");
    double acc = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = static_cast<double>(da[i]) - db[i];
        acc += d * d;
    }
    return da.empty() ? 0.0 : acc / static_cast<double>(da.size());
}

namespace {

unsigned char to_byte(float v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_pixels(const std::filesystem::path& path, int width, int height, const std::vector<unsigned char>& rgb) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::Io, "cannot open " + path.string());
    os << "P6\n" << width << " " << height << "\n255\n";
    os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const VideoClip& clip, int frame) {
    const VideoClip* clips[] = {&clip};
    write_ppm_side_by_side(path, clips, frame);
}

void write_ppm_side_by_side(const std::filesystem::path& path, std::span<const VideoClip* const> clips, int frame) {
    if (clips.empty()) fail(ErrorKind::InvalidParams, "no clips to write");
    const int h = clips[0]->height();
    int total_w = 0;
    for (const auto* c : clips) {
        if (c->height() != h || frame < 0 || frame >= c->frames()) {
            fail(ErrorKind::InvalidParams, "side-by-side clips must share height and contain the frame");
        }
        total_w += c->width();
    }
    std::vector<unsigned char> rgb(static_cast<std::size_t>(total_w) * h * 3);
    int x0 = 0;
    for (const auto* c : clips) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < c->width(); ++x) {
                for (int ch = 0; ch < 3; ++ch) {
                    rgb[(static_cast<std::size_t>(y) * total_w + x0 + x) * 3 + ch] = to_byte(c->at(frame, ch, y, x));
                }
            }
        }
        x0 += c->width();
    }
    write_pixels(path, total_w, h, rgb);
}

}  // namespace recam
