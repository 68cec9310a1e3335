#pragma once

#include <cstdint>
#include <string>

#include "normscore/image.hpp"

namespace normscore {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 8-bit PNG I/O. Quantization to/from bytes happens only here.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

// Grayscale maps as 8-bit PNG; values are clamped to [0,1] before quantizing.
Tensor read_png_gray(const std::string& path);
void write_png_gray(const std::string& path, const Tensor& map);

// Lossless 2-D array dump in NumPy .npy v1.0 format ('<f8', C order).
void write_npy(const std::string& path, const Tensor& map);

// FNV-1a 64-bit content hash, hex encoded. Provenance tag, not cryptographic.
std::string file_hash_hex(const std::string& path);

}  // namespace normscore
