#pragma once

#include <string>

#include "brt/dataio/types.hpp"

namespace brt::dataio {

struct Dataset {
    MarketTensor market;
    MacroPanel macro;
};

// Single-file binary artifact. Byte-for-byte deterministic for identical
// contents, so artifact hashes are reproducible.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

} // namespace brt::dataio
