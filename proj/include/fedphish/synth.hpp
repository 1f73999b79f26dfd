#ifndef FEDPHISH_SYNTH_HPP
#define FEDPHISH_SYNTH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedphish/dataset.hpp"

namespace fedphish {

/// Deterministic synthetic phishing-URL corpus, exactly balanced (odd counts
/// give the extra record to the legitimate class). The label signal lives in
/// lexical counts and deliberately reverses meaning between short and long
/// URLs, so a drift partition ordered by length forces genuine forgetting:
/// short URLs mark phishing with hyphens and legitimate sites with dots,
/// long URLs swap the two, while '@' and '%' carry a weak length-independent
/// signal. URLs never contain "//" beyond the protocol separator.
std::vector<std::pair<std::string, int>> synth_urls(int count, std::uint64_t seed);

/// synth_urls passed through extract_features, under the canonical schema.
Dataset synth_dataset(int count, std::uint64_t seed);

/// Write a `url,label` CSV of synth_urls to `path`.
void write_synth_csv(const std::string& path, int count, std::uint64_t seed);

} // namespace fedphish

#endif
