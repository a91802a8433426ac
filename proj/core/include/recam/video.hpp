// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace recam {

/// F×3×H×W frames, row-major, values in [0, 1].
class VideoClip {
public:
    VideoClip() = default;
    VideoClip(int frames, int height, int width, float fill = 0.0f);

    int frames() const { return frames_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    std::size_t frame_stride() const { return static_cast<std::size_t>(3) * height_ * width_; }

    float& at(int f, int c, int y, int x) { return data_[index(f, c, y, x)]; }
    float at(int f, int c, int y, int x) const { return data_[index(f, c, y, x)]; }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }
    std::span<float> frame(int f) { return std::span<float>(data_).subspan(f * frame_stride(), frame_stride()); }
    std::span<const float> frame(int f) const {
        return std::span<const float>(data_).subspan(f * frame_stride(), frame_stride());
    }

    bool same_shape(const VideoClip& other) const {
        return frames_ == other.frames_ && height_ == other.height_ && width_ == other.width_;
    }
    bool operator==(const VideoClip& other) const = default;

    void clamp01();

private:
    std::size_t index(int f, int c, int y, int x) const {
        return ((static_cast<std::size_t>(f) * 3 + c) * height_ + y) * width_ + x;
    }

    int frames_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

/// Throws ErrorKind::InvalidParams on values outside [0, 1] or NaN.
void validate_clip(const VideoClip& clip);

double clip_mse(const VideoClip& a, const VideoClip& b);

/// Binary P6 pixmap, maxval 255, row-major RGB.
void write_ppm(const std::filesystem::path& path, const VideoClip& clip, int frame);

/// Frame `frame` of each clip placed left to right.
void write_ppm_side_by_side(const std::filesystem::path& path, std::span<const VideoClip* const> clips, int frame);

}  // namespace recam
