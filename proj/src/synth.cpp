#include "fedphish/synth.hpp"

#include <fstream>

#include "fedphish/errors.hpp"
#include "fedphish/rng.hpp"

namespace fedphish {

namespace {

// Corpus dials. Lengths span [kMinLen, kMaxLen); the marker regime changes
// at kFlipLen, which sits at the median so a 4-way drift partition puts the
// change exactly between streams 2 and 3. Short URLs carry a strong
// hyphen/dot class rule; long URLs carry a strong underscore/tilde rule plus
// a weak inverted echo of the hyphen/dot rule, so late training actively
// erodes the early rule while the union stays linearly separable. Every
// marker stays non-constant inside each length band (normalization stats are
// frozen on the first stream and must not zero any rule out).
constexpr int kMinLen = 20;
constexpr int kMaxLen = 80;
constexpr int kFlipLen = 50;
constexpr int kEarlyBase = 2;   // short-URL strong marker count in {2,3,4}
constexpr int kEarlySpread = 3;
constexpr int kEarlyNoise = 3;  // short-URL light/noise marker count in {0,1,2}
constexpr int kLateBase = 3;    // long-URL strong marker count in {3,4,5}
constexpr int kLateSpread = 3;
constexpr int kLateNoise = 2;   // long-URL light marker count in {0,1}
constexpr int kEchoBase = 3;    // inverted echo marker count in {3,4}
constexpr int kEchoSpread = 2;
constexpr double kStableHitRate = 0.6; // P('@' present | phishing), same for '%'

std::string make_url(int label, RngStream& rng) {
    const int len = kMinLen + static_cast<int>(rng.uniform_int(kMaxLen - kMinLen));
    const bool is_short = len < kFlipLen;
    const bool phishing = label == 1;

    int hyphens = 0, dots = 0, unders = 0, tildes = 0;
    if (is_short) {
        const int heavy = kEarlyBase + static_cast<int>(rng.uniform_int(kEarlySpread));
        const int light = static_cast<int>(rng.uniform_int(kEarlyNoise));
        hyphens = phishing ? heavy : light;
        dots = phishing ? light : heavy;
        unders = static_cast<int>(rng.uniform_int(kLateNoise));
        tildes = static_cast<int>(rng.uniform_int(kLateNoise));
    } else {
        const int heavy = kLateBase + static_cast<int>(rng.uniform_int(kLateSpread));
        const int light = static_cast<int>(rng.uniform_int(kLateNoise));
        unders = phishing ? heavy : light;
        tildes = phishing ? light : heavy;
        const int echo = kEchoBase + static_cast<int>(rng.uniform_int(kEchoSpread));
        hyphens = phishing ? 0 : echo;
        dots = phishing ? echo : 0;
    }
    const double stable_p = phishing ? kStableHitRate : 1.0 - kStableHitRate;
    const bool has_at = rng.uniform() < stable_p;
    const bool has_pct = rng.uniform() < stable_p;

    std::vector<char> body;
    body.reserve(static_cast<std::size_t>(len - 7));
    for (int i = 0; i < hyphens; ++i) body.push_back('-');
    for (int i = 0; i < dots; ++i) body.push_back('.');
    for (int i = 0; i < unders; ++i) body.push_back('_');
    for (int i = 0; i < tildes; ++i) body.push_back('~');
    if (has_at) body.push_back('@');
    if (has_pct) body.push_back('%');
    while (static_cast<int>(body.size()) < len - 7)
        body.push_back(static_cast<char>('a' + rng.uniform_int(26)));
    rng.shuffle(body);
    return "http://" + std::string(body.begin(), body.end());
}

} // namespace

std::vector<std::pair<std::string, int>> synth_urls(int count, std::uint64_t seed) {
    if (count < 2) throw ConfigError("synthetic corpus: need at least 2 records");
    RngStream rng(derive_seed(seed, "synth"));
    std::vector<std::pair<std::string, int>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int label = i % 2;
        out.emplace_back(make_url(label, rng), label);
    }
    return out;
}

Dataset synth_dataset(int count, std::uint64_t seed) {
    Dataset ds;
    ds.feature_names = canonical_feature_names();
    ds.source = "synthetic";
    for (const auto& [url, label] : synth_urls(count, seed)) {
        DatasetRecord rec;
        rec.features = extract_features(url);
        rec.label = label;
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

void write_synth_csv(const std::string& path, int count, std::uint64_t seed) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "url,label\n";
    for (const auto& [url, label] : synth_urls(count, seed)) os << url << ',' << label << "\n";
    if (!os) throw IoError("write to '" + path + "' failed");
}

} // namespace fedphish
