#pragma once

#include <cstdint>
#include <string>

#include "tabshift/ctgan.hpp"

namespace tabshift {

inline constexpr const char* kModelMagic = "TABSHIFT-MODEL";
inline constexpr std::uint32_t kModelVersion = 1;

// Single-file model format: magic string, version, a JSON structure header
// (schema, transform settings, network shapes, config, frequency counts),
// then all floating-point parameters as raw little-endian doubles, so that
// save/load round trips are bit-exact.
void save_model(const CtganModel& model, const std::string& path);

// Throws std::runtime_error on unreadable files, bad magic, or unsupported
// versions.
CtganModel load_model(const std::string& path);

}  // namespace tabshift
