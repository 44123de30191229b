#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace brt {

// SHA-256 content addresses for artifacts (datasets, checkpoints, reports).
// Identical (config, data, seed) must yield identical digests, so nothing
// time- or machine-dependent may enter hashed payloads.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

} // namespace brt
