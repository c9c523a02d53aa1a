#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "osmfac/element.hpp"
#include "osmfac/error.hpp"
#include "osmfac/wire.hpp"

namespace osmfac::pbf {

using wire::Bytes;
using wire::ByteView;

inline constexpr std::string_view kHeaderType = "OSMHeader";
inline constexpr std::string_view kDataType = "OSMData";

// Limits from the container format definition.
inline constexpr std::size_t kMaxBlobHeaderSize = 64 * 1024;
inline constexpr std::size_t kMaxBlobSize = 32 * 1024 * 1024;

struct BlobFrame {
    std::string header_type;
    Bytes payload;  // decompressed
    std::optional<std::int64_t> declared_raw_size;
    std::size_t file_offset = 0;  // offset of the 4-byte length prefix
};

/// Sequential frame reader. Unknown header types are skipped and counted
/// under "pbf.unknown_blob_type".
class BlobFrameReader {
public:
    explicit BlobFrameReader(std::istream& in, WarningCounters* warnings = nullptr)
        : in_(in), warnings_(warnings) {}

    /// Next known frame, or nullopt at a clean end of stream.
    std::optional<BlobFrame> next();

    /// Like next(), but leaves the payload compressed; call decompress() later
    /// (possibly on another thread).
    struct Pending {
        std::string header_type;
        Bytes blob;  // encoded Blob message
        std::size_t file_offset = 0;
        std::size_t blob_offset = 0;
    };
    std::optional<Pending> next_pending();

    std::size_t offset() const noexcept { return offset_; }

private:
    std::istream& in_;
    WarningCounters* warnings_;
    std::size_t offset_ = 0;
};

/// Decodes a Blob message and returns its decompressed payload.
/// Raw and zlib payloads are supported; lzma/lz4/zstd/bzip2 raise
/// UnsupportedCompression, a raw_size mismatch raises IntegrityError.
BlobFrame decompress(BlobFrameReader::Pending pending);

std::vector<BlobFrame> read_blob_frames(std::istream& in, WarningCounters* warnings = nullptr);

struct HeaderInfo {
    std::vector<std::string> required_features;
    std::vector<std::string> optional_features;
    std::string writing_program;
};

/// Decodes an OSMHeader payload. Unknown required features raise DecodeError.
HeaderInfo decode_header_block(ByteView payload);

/// An encoded sub-message and its offset within the block payload.
struct Encoded {
    ByteView bytes;
    std::size_t offset = 0;
};

/// Raw sub-messages of one PrimitiveGroup, still encoded.
struct PrimitiveGroup {
    std::vector<Encoded> nodes;
    std::optional<Encoded> dense;
    std::vector<Encoded> ways;
    std::vector<Encoded> relations;
};

/// Views into a decompressed OSMData payload; the payload must outlive it.
struct PrimitiveBlockView {
    std::vector<std::string> string_table;
    std::int32_t granularity = 100;
    std::int64_t lat_offset = 0;
    std::int64_t lon_offset = 0;
    std::vector<PrimitiveGroup> groups;

    const std::string& string_at(std::uint64_t index, std::size_t offset) const;
};

PrimitiveBlockView decode_primitive_block(ByteView payload);

/// Prefix sums; OverflowError if the running sum leaves the int64 range.
std::vector<std::int64_t> delta_decode(std::span<const std::int64_t> deltas);

/// 1e-9 * (offset + granularity * raw), in degrees.
double to_degrees(std::int64_t raw, std::int32_t granularity, std::int64_t offset);

std::vector<RawElement> decode_dense_nodes(const PrimitiveGroup& group, const PrimitiveBlockView& block);
std::vector<RawElement> decode_nodes(const PrimitiveGroup& group, const PrimitiveBlockView& block);
std::vector<RawElement> decode_ways(const PrimitiveGroup& group, const PrimitiveBlockView& block);
std::vector<RawElement> decode_relations(const PrimitiveGroup& group, const PrimitiveBlockView& block);

/// All elements of a block: per group, plain nodes, dense nodes, ways, relations.
std::vector<RawElement> decode_block_elements(ByteView payload);

/// refs.front() == refs.back() and at least four refs.
bool is_closed_way(const RawElement& way);

/// Tagged nodes and closed ways, in input order.
std::vector<RawElement> filter_structures(std::span<const RawElement> elements);
bool passes_structure_filter(const RawElement& e);

using NodeIndex = std::unordered_map<std::int64_t, LatLon>;

struct DecodeStats {
    std::uint64_t frames = 0;
    std::uint64_t nodes = 0;
    std::uint64_t ways = 0;
    std::uint64_t relations = 0;
    std::uint64_t decoded() const noexcept { return nodes + ways + relations; }
};

/// Result of streaming a whole file: filtered structures plus the
/// coordinate index of every decoded node (tagged or not).
struct FileContents {
    std::vector<RawElement> structures;
    NodeIndex node_index;
    DecodeStats stats;
    HeaderInfo header;
};

/// Reads frames sequentially and decodes data blobs on up to `threads`
/// workers; results keep file order.
FileContents read_file(std::istream& in, unsigned threads = 1, WarningCounters* warnings = nullptr);

}  // namespace osmfac::pbf
