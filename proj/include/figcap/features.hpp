#pragma once

#include "figcap/hocr.hpp"
#include "figcap/image.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace figcap {

/// Feature channels. The numeric value is the id written to FSTK manifests.
enum class ChannelId : std::uint8_t {
  gs,       ///< inverted grayscale
  fs,       ///< font size z-score
  asc,      ///< ascenders minus page median
  dec,      ///< descenders minus page median
  wc,       ///< word confidence
  pct_num,  ///< fraction of digits
  pct_let,  ///< fraction of letters
  punct,    ///< punctuation flag
  t_ang,    ///< word rotation
  sp_pos,   ///< part of speech (19)
  sp_tag,   ///< fine-grained tag (57)
  sp_dep,   ///< syntactic dependency (51)
  p_b,      ///< paragraph boxes
  c_b,      ///< content-area boxes
};

inline constexpr std::size_t kChannelCount = 14;
inline constexpr int kStackSize = 512;

inline constexpr std::array<ChannelId, kChannelCount> kAllChannels = {
    ChannelId::gs,      ChannelId::fs,     ChannelId::asc,    ChannelId::dec,
    ChannelId::wc,      ChannelId::pct_num, ChannelId::pct_let, ChannelId::punct,
    ChannelId::t_ang,   ChannelId::sp_pos, ChannelId::sp_tag, ChannelId::sp_dep,
    ChannelId::p_b,     ChannelId::c_b};

/// Best-performing feature set: gs, asc, dec, wc, pct_num, pct_let, punct,
/// t_ang, sp_pos.
std::vector<ChannelId> m12_channels();

std::string_view channel_name(ChannelId id);
std::optional<ChannelId> channel_from_name(std::string_view name);

/// Accepts "m12", "all", or a comma-separated list of channel names. The
/// result is deduplicated and in ChannelId order. Throws UsageError.
std::vector<ChannelId> parse_channel_set(std::string_view spec);

using Plane = Image<std::uint8_t>;

struct FeatureChannel {
  ChannelId id;
  Plane plane;

  friend bool operator==(const FeatureChannel& a, const FeatureChannel& b) {
    return a.id == b.id && a.plane == b.plane;
  }
};

struct FeatureStack {
  std::string source_id;
  std::vector<FeatureChannel> channels;

  const Plane* find(ChannelId id) const;
  friend bool operator==(const FeatureStack&, const FeatureStack&) = default;
};

// Per-word byte encodings. 0 is reserved for "no word here" in every channel.

/// z = (fs - median) / std (population). |z| > 5 maps to 0 (ignored), else
/// round(128 + 127 z / 5). A page with zero spread maps every word to 128.
std::vector<std::uint8_t> normalize_fontsize(const Page& page);

enum class TypoMetric { ascenders, descenders };

/// v = value - page median, clipped to [-5, 5], mapped to round(128 + 127 v / 5).
std::vector<std::uint8_t> normalize_typo(const Page& page, TypoMetric which);

struct CharClassBytes {
  std::uint8_t pct_let = 0;
  std::uint8_t pct_num = 0;
  std::uint8_t punct = 0;
  friend bool operator==(const CharClassBytes&, const CharClassBytes&) = default;
};

/// Letter and digit fractions scaled to [125,255]; punct is 250 when any
/// character is punctuation, else 125. Empty text gives all zeros.
CharClassBytes char_class_channels(const Word& word);

/// 0 -> 85, 90 and 180 -> 170, 270 -> 255.
std::uint8_t rotation_channel(int rotation_deg);
inline std::uint8_t rotation_channel(const Word& w) { return rotation_channel(w.rotation_deg); }

/// Confidence percent mapped to [1,255].
std::uint8_t confidence_channel(const Word& word);

inline constexpr int kPosCardinality = 19;
inline constexpr int kTagCardinality = 57;
inline constexpr int kDepCardinality = 51;

struct WordTags {
  int pos = 0;
  int tag = 0;
  int dep = 0;
  friend bool operator==(const WordTags&, const WordTags&) = default;
};

/// Maps a word sequence to one WordTags per word.
using TagProvider = std::function<std::vector<WordTags>(std::span<const Word>)>;

/// Universal part-of-speech inventory, indexed by WordTags::pos.
std::span<const std::string_view> pos_inventory();

/// Hermetic tagger: number-like words -> NUM, words with letters -> NOUN,
/// everything else -> X. Tag and dep ids follow the same three-way split.
TagProvider fallback_tag_provider();

/// Provider returning precomputed tags; throws SchemaError on a length mismatch.
TagProvider sidecar_tag_provider(std::vector<WordTags> tags);

/// Reads a tag sidecar: [{pos:int, tag:int, dep:int}, ...].
std::vector<WordTags> parse_tag_sidecar(const nlohmann::json& j);

/// round(255 (id + 1) / cardinality). Throws ProviderCardinalityViolation
/// when id is outside [0, cardinality).
std::uint8_t category_byte(int id, int cardinality);

struct LinguisticBytes {
  std::uint8_t pos = 0;
  std::uint8_t tag = 0;
  std::uint8_t dep = 0;
};

std::vector<LinguisticBytes> linguistic_channels(const Page& page,
                                                 const TagProvider& provider);

/// Area-averaging resample to rows x cols.
FloatImage downsample_area(const GrayImage& img, int rows, int cols);

struct RasterDiagnostics {
  int rotation90_words = 0;  ///< words at 90 degrees, binned with 180
};

/// Builds the 512x512 stack for the requested channels. Word and region boxes
/// are scaled by (512/width, 512/height) and filled with their byte; overlaps
/// keep the per-pixel maximum. Throws DimensionMismatch when the image does not
/// match the page.
FeatureStack rasterize(const Page& page, const GrayImage& grayscale,
                       std::span<const ChannelId> channels,
                       const TagProvider& provider = fallback_tag_provider(),
                       RasterDiagnostics* diagnostics = nullptr);

/// FSTK container: "FSTK1", u16 channel count, per channel (u8 id, 16-byte
/// zero-padded name), then 512*512 bytes per channel, row-major.
void write_fstk(std::ostream& out, const FeatureStack& stack);
FeatureStack read_fstk(std::istream& in);

}  // namespace figcap
