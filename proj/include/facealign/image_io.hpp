#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "facealign/image.hpp"

namespace facealign {

/// Single-channel files decode to GrayImage, everything else to RgbImage.
using AnyImage = std::variant<GrayImage, RgbImage>;

/// Decodes binary PGM (P5), binary PPM (P6), PNG and JPEG, sniffed by magic
/// bytes. `name` is only used in error messages.
AnyImage decode_image(std::span<const std::uint8_t> bytes, const std::string& name);
AnyImage load_image(const std::filesystem::path& path);

/// Loads any supported file and converts colour input with to_grayscale.
GrayImage load_gray(const std::filesystem::path& path);

Size image_size(const AnyImage& img);

std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
std::vector<std::uint8_t> encode_png(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const RgbImage& img);

/// Format chosen by extension: .pgm/.ppm/.png.
void save_image(const GrayImage& img, const std::filesystem::path& path);
void save_image(const RgbImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

bool is_supported_image_path(const std::filesystem::path& path);
std::string_view content_type_for(const std::filesystem::path& path);

}  // namespace facealign
