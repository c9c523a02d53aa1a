#include "osmfac/pbf_reader.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <future>
#include <limits>

namespace osmfac {

const char* to_string(ElementKind kind) noexcept {
    switch (kind) {
    case ElementKind::Node: return "node";
    case ElementKind::Way: return "way";
    case ElementKind::Relation: return "relation";
    }
    return "unknown";
}

void check_invariants(const RawElement& e) {
    const std::string who = std::string(to_string(e.kind)) + " " + std::to_string(e.id);
    switch (e.kind) {
    case ElementKind::Node:
        if (!e.coordinates) throw InvariantError(who + " has no coordinates");
        if (!(e.coordinates->lat >= -90.0 && e.coordinates->lat <= 90.0) ||
            !(e.coordinates->lon >= -180.0 && e.coordinates->lon <= 180.0))
            throw InvariantError(who + " has coordinates out of range");
        break;
    case ElementKind::Way:
        if (e.refs.empty()) throw InvariantError(who + " has no node refs");
        break;
    case ElementKind::Relation:
        break;
    }
}

}  // namespace osmfac

namespace osmfac::pbf {

namespace {

enum BlobHeaderField : std::uint32_t { kBhType = 1, kBhIndexData = 2, kBhDataSize = 3 };

enum BlobField : std::uint32_t {
    kBlobRaw = 1,
    kBlobRawSize = 2,
    kBlobZlib = 3,
    kBlobLzma = 4,
    kBlobBzip2 = 5,
    kBlobLz4 = 6,
    kBlobZstd = 7,
};

enum BlockField : std::uint32_t {
    kStringTable = 1,
    kPrimitiveGroup = 2,
    kGranularity = 17,
    kDateGranularity = 18,
    kLatOffset = 19,
    kLonOffset = 20,
};

enum GroupField : std::uint32_t { kGroupNodes = 1, kGroupDense = 2, kGroupWays = 3, kGroupRelations = 4 };

std::size_t read_exact(std::istream& in, std::uint8_t* dst, std::size_t n) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount());
}

Bytes inflate_zlib(ByteView compressed, std::optional<std::int64_t> declared, std::size_t offset) {
    const std::size_t limit = declared ? static_cast<std::size_t>(*declared) : kMaxBlobSize;
    Bytes out;
    // One spare byte so an over-long stream is detected rather than truncated.
    out.resize(std::min<std::size_t>(limit + 1, std::max<std::size_t>(compressed.size() * 4, 4096)));

    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw DecodeError("zlib init failed", offset);
    zs.next_in = const_cast<Bytef*>(compressed.data());
    zs.avail_in = static_cast<uInt>(compressed.size());
    std::size_t produced = 0;
    int rc = Z_OK;
    while (true) {
        if (produced == out.size()) {
            if (out.size() > limit) break;
            out.resize(std::min(limit + 1, out.size() * 2));
        }
        zs.next_out = out.data() + produced;
        zs.avail_out = static_cast<uInt>(out.size() - produced);
        rc = inflate(&zs, Z_NO_FLUSH);
        produced = out.size() - zs.avail_out;
        if (rc == Z_STREAM_END) break;
        if (rc == Z_BUF_ERROR && zs.avail_in == 0) {
            inflateEnd(&zs);
            throw DecodeError("truncated zlib stream", offset);
        }
        if (rc != Z_OK && rc != Z_BUF_ERROR) {
            const std::string msg = zs.msg ? zs.msg : "error " + std::to_string(rc);
            inflateEnd(&zs);
            throw DecodeError("zlib: " + msg, offset);
        }
    }
    inflateEnd(&zs);
    if (rc != Z_STREAM_END && produced > limit) {
        if (declared)
            throw IntegrityError("inflated payload exceeds declared raw_size " + std::to_string(*declared));
        throw DecodeError("inflated payload exceeds maximum blob size", offset);
    }
    out.resize(produced);
    if (declared && static_cast<std::int64_t>(produced) != *declared)
        throw IntegrityError("inflated " + std::to_string(produced) + " bytes but raw_size declares " +
                             std::to_string(*declared));
    return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b, std::size_t offset) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw OverflowError("delta sum overflows int64", offset);
    return r;
}

void decode_tags(std::span<const std::uint32_t> keys, std::span<const std::uint32_t> vals,
                 const PrimitiveBlockView& block, std::size_t offset, TagMap& tags) {
    if (keys.size() != vals.size()) throw DecodeError("keys/vals length mismatch", offset);
    for (std::size_t i = 0; i < keys.size(); ++i)
        tags.set(block.string_at(keys[i], offset), block.string_at(vals[i], offset));
}

LatLon make_coordinates(std::int64_t lat, std::int64_t lon, const PrimitiveBlockView& block, std::size_t offset) {
    LatLon p{to_degrees(lat, block.granularity, block.lat_offset),
             to_degrees(lon, block.granularity, block.lon_offset)};
    if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0))
        throw DecodeError("node coordinates out of range", offset);
    return p;
}

}  // namespace

std::optional<BlobFrameReader::Pending> BlobFrameReader::next_pending() {
    while (true) {
        const std::size_t frame_offset = offset_;
        std::array<std::uint8_t, 4> len_buf{};
        const std::size_t got = read_exact(in_, len_buf.data(), 4);
        if (got == 0) return std::nullopt;
        if (got < 4) throw DecodeError("truncated frame length", frame_offset);
        offset_ += 4;
        const std::uint32_t header_len = (std::uint32_t{len_buf[0]} << 24) | (std::uint32_t{len_buf[1]} << 16) |
                                         (std::uint32_t{len_buf[2]} << 8) | std::uint32_t{len_buf[3]};
        if (header_len > kMaxBlobHeaderSize)
            throw DecodeError("blob header length " + std::to_string(header_len) + " exceeds limit", frame_offset);

        Bytes header(header_len);
        if (read_exact(in_, header.data(), header_len) != header_len)
            throw DecodeError("truncated blob header", offset_);
        const std::size_t header_offset = offset_;
        offset_ += header_len;

        std::optional<std::string> type;
        std::optional<std::int64_t> datasize;
        wire::Reader r(header, header_offset);
        wire::Field f;
        while (r.next(f)) {
            if (f.number == kBhType) type = wire::as_string(f);
            else if (f.number == kBhDataSize) datasize = wire::as_int64(f);
        }
        if (!type) throw DecodeError("blob header without type", header_offset, kBhType);
        if (!datasize) throw DecodeError("blob header without datasize", header_offset, kBhDataSize);
        if (*datasize < 0 || *datasize > static_cast<std::int64_t>(kMaxBlobSize))
            throw DecodeError("blob datasize " + std::to_string(*datasize) + " out of range", header_offset,
                              kBhDataSize);

        Pending p;
        p.header_type = std::move(*type);
        p.file_offset = frame_offset;
        p.blob_offset = offset_;
        p.blob.resize(static_cast<std::size_t>(*datasize));
        if (read_exact(in_, p.blob.data(), p.blob.size()) != p.blob.size())
            throw DecodeError("truncated blob", offset_);
        offset_ += p.blob.size();

        if (p.header_type != kHeaderType && p.header_type != kDataType) {
            warn(warnings_, "pbf.unknown_blob_type");
            continue;
        }
        return p;
    }
}

std::optional<BlobFrame> BlobFrameReader::next() {
    auto p = next_pending();
    if (!p) return std::nullopt;
    return decompress(std::move(*p));
}

BlobFrame decompress(BlobFrameReader::Pending pending) {
    BlobFrame frame;
    frame.header_type = std::move(pending.header_type);
    frame.file_offset = pending.file_offset;

    std::optional<wire::Field> data;
    wire::Reader r(pending.blob, pending.blob_offset);
    wire::Field f;
    while (r.next(f)) {
        switch (f.number) {
        case kBlobRawSize: {
            const std::int64_t v = wire::as_int64(f);
            if (v < 0 || v > static_cast<std::int64_t>(kMaxBlobSize))
                throw DecodeError("raw_size " + std::to_string(v) + " out of range", f.offset, f.number);
            frame.declared_raw_size = v;
            break;
        }
        case kBlobRaw:
        case kBlobZlib:
        case kBlobLzma:
        case kBlobBzip2:
        case kBlobLz4:
        case kBlobZstd:
            wire::expect_type(f, wire::WireType::LengthDelimited);
            data = f;
            break;
        default:
            break;
        }
    }
    if (!data) throw DecodeError("blob carries no data", pending.blob_offset);

    switch (data->number) {
    case kBlobRaw:
        if (frame.declared_raw_size && *frame.declared_raw_size != static_cast<std::int64_t>(data->bytes.size()))
            throw IntegrityError("raw blob is " + std::to_string(data->bytes.size()) +
                                 " bytes but raw_size declares " + std::to_string(*frame.declared_raw_size));
        frame.payload.assign(data->bytes.begin(), data->bytes.end());
        break;
    case kBlobZlib:
        frame.payload = inflate_zlib(data->bytes, frame.declared_raw_size, data->offset);
        break;
    case kBlobLzma: throw UnsupportedCompression("lzma");
    case kBlobBzip2: throw UnsupportedCompression("bzip2");
    case kBlobLz4: throw UnsupportedCompression("lz4");
    case kBlobZstd: throw UnsupportedCompression("zstd");
    }
    return frame;
}

std::vector<BlobFrame> read_blob_frames(std::istream& in, WarningCounters* warnings) {
    BlobFrameReader reader(in, warnings);
    std::vector<BlobFrame> frames;
    while (auto f = reader.next()) frames.push_back(std::move(*f));
    return frames;
}

HeaderInfo decode_header_block(ByteView payload) {
    static constexpr std::array<std::string_view, 2> kSupported{"OsmSchema-V0.6", "DenseNodes"};
    HeaderInfo info;
    wire::Reader r(payload);
    wire::Field f;
    while (r.next(f)) {
        switch (f.number) {
        case 4: {
            auto feature = wire::as_string(f);
            if (std::find(kSupported.begin(), kSupported.end(), feature) == kSupported.end())
                throw DecodeError("unsupported required feature '" + feature + "'", f.offset, f.number);
            info.required_features.push_back(std::move(feature));
            break;
        }
        case 5: info.optional_features.push_back(wire::as_string(f)); break;
        case 16: info.writing_program = wire::as_string(f); break;
        default: break;
        }
    }
    return info;
}

const std::string& PrimitiveBlockView::string_at(std::uint64_t index, std::size_t offset) const {
    if (index >= string_table.size())
        throw DecodeError("string table index " + std::to_string(index) + " out of range (table size " +
                              std::to_string(string_table.size()) + ")",
                          offset);
    return string_table[static_cast<std::size_t>(index)];
}

PrimitiveBlockView decode_primitive_block(ByteView payload) {
    PrimitiveBlockView block;
    wire::Reader r(payload);
    wire::Field f;
    while (r.next(f)) {
        switch (f.number) {
        case kStringTable: {
            wire::expect_type(f, wire::WireType::LengthDelimited);
            wire::Reader st(f.bytes, f.offset);
            wire::Field s;
            while (st.next(s))
                if (s.number == 1) block.string_table.push_back(wire::as_string(s));
            break;
        }
        case kPrimitiveGroup: {
            wire::expect_type(f, wire::WireType::LengthDelimited);
            PrimitiveGroup group;
            wire::Reader gr(f.bytes, f.offset);
            wire::Field g;
            while (gr.next(g)) {
                if (g.number < kGroupNodes || g.number > kGroupRelations) continue;
                wire::expect_type(g, wire::WireType::LengthDelimited);
                const Encoded enc{g.bytes, g.offset};
                switch (g.number) {
                case kGroupNodes: group.nodes.push_back(enc); break;
                case kGroupDense:
                    if (group.dense) throw DecodeError("duplicate dense group", g.offset, g.number);
                    group.dense = enc;
                    break;
                case kGroupWays: group.ways.push_back(enc); break;
                case kGroupRelations: group.relations.push_back(enc); break;
                }
            }
            block.groups.push_back(std::move(group));
            break;
        }
        case kGranularity: {
            const std::int64_t g = wire::as_int64(f);
            if (g <= 0 || g > std::numeric_limits<std::int32_t>::max())
                throw DecodeError("granularity must be positive", f.offset, f.number);
            block.granularity = static_cast<std::int32_t>(g);
            break;
        }
        case kLatOffset: block.lat_offset = wire::as_int64(f); break;
        case kLonOffset: block.lon_offset = wire::as_int64(f); break;
        case kDateGranularity:
        default: break;
        }
    }
    if (!block.string_table.empty() && !block.string_table.front().empty())
        throw InvariantError("string table entry 0 must be empty");
    return block;
}

std::vector<std::int64_t> delta_decode(std::span<const std::int64_t> deltas) {
    std::vector<std::int64_t> out;
    out.reserve(deltas.size());
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        acc = checked_add(acc, deltas[i], i);
        out.push_back(acc);
    }
    return out;
}

double to_degrees(std::int64_t raw, std::int32_t granularity, std::int64_t offset) {
    const __int128 nanodegrees = static_cast<__int128>(offset) + static_cast<__int128>(granularity) * raw;
    return static_cast<double>(nanodegrees) / 1e9;
}

std::vector<RawElement> decode_dense_nodes(const PrimitiveGroup& group, const PrimitiveBlockView& block) {
    std::vector<RawElement> out;
    if (!group.dense) return out;
    const Encoded& dense = *group.dense;

    std::vector<std::int64_t> ids, lats, lons;
    std::vector<std::int32_t> kv;
    wire::Reader r(dense.bytes, dense.offset);
    wire::Field f;
    while (r.next(f)) {
        switch (f.number) {
        case 1: wire::append_repeated<std::int64_t, true>(f, ids); break;
        case 8: wire::append_repeated<std::int64_t, true>(f, lats); break;
        case 9: wire::append_repeated<std::int64_t, true>(f, lons); break;
        case 10: wire::append_repeated<std::int32_t, false>(f, kv); break;
        default: break;
        }
    }
    if (ids.size() != lats.size() || ids.size() != lons.size())
        throw DecodeError("dense id/lat/lon arrays differ in length", dense.offset, 1);

    ids = delta_decode(ids);
    lats = delta_decode(lats);
    lons = delta_decode(lons);

    out.reserve(ids.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        RawElement node = RawElement::node(ids[i], make_coordinates(lats[i], lons[i], block, dense.offset));
        // An entirely absent key/value stream means no node carries tags.
        if (!kv.empty()) {
            while (true) {
                if (pos >= kv.size())
                    throw DecodeError("dense key/value stream exhausted at node " + std::to_string(i), dense.offset, 10);
                if (kv[pos] == 0) {
                    ++pos;
                    break;
                }
                if (pos + 1 >= kv.size())
                    throw DecodeError("dense key/value stream ends inside a pair", dense.offset, 10);
                if (kv[pos] < 0 || kv[pos + 1] < 0)
                    throw DecodeError("negative string table index", dense.offset, 10);
                node.tags.set(block.string_at(static_cast<std::uint64_t>(kv[pos]), dense.offset),
                              block.string_at(static_cast<std::uint64_t>(kv[pos + 1]), dense.offset));
                pos += 2;
            }
        }
        out.push_back(std::move(node));
    }
    if (pos != kv.size()) throw DecodeError("trailing data in dense key/value stream", dense.offset, 10);
    return out;
}

std::vector<RawElement> decode_nodes(const PrimitiveGroup& group, const PrimitiveBlockView& block) {
    std::vector<RawElement> out;
    for (const Encoded& enc : group.nodes) {
        std::optional<std::int64_t> id, lat, lon;
        std::vector<std::uint32_t> keys, vals;
        wire::Reader r(enc.bytes, enc.offset);
        wire::Field f;
        while (r.next(f)) {
            switch (f.number) {
            case 1: id = wire::as_sint64(f); break;
            case 2: wire::append_repeated<std::uint32_t, false>(f, keys); break;
            case 3: wire::append_repeated<std::uint32_t, false>(f, vals); break;
            case 8: lat = wire::as_sint64(f); break;
            case 9: lon = wire::as_sint64(f); break;
            default: break;
            }
        }
        if (!id || !lat || !lon) throw DecodeError("node missing id or coordinates", enc.offset);
        RawElement node = RawElement::node(*id, make_coordinates(*lat, *lon, block, enc.offset));
        decode_tags(keys, vals, block, enc.offset, node.tags);
        out.push_back(std::move(node));
    }
    return out;
}

std::vector<RawElement> decode_ways(const PrimitiveGroup& group, const PrimitiveBlockView& block) {
    std::vector<RawElement> out;
    for (const Encoded& enc : group.ways) {
        std::optional<std::int64_t> id;
        std::vector<std::uint32_t> keys, vals;
        std::vector<std::int64_t> refs;
        wire::Reader r(enc.bytes, enc.offset);
        wire::Field f;
        while (r.next(f)) {
            switch (f.number) {
            case 1: id = wire::as_int64(f); break;
            case 2: wire::append_repeated<std::uint32_t, false>(f, keys); break;
            case 3: wire::append_repeated<std::uint32_t, false>(f, vals); break;
            case 8: wire::append_repeated<std::int64_t, true>(f, refs); break;
            default: break;
            }
        }
        if (!id) throw DecodeError("way missing id", enc.offset, 1);
        if (refs.empty()) throw InvariantError("way " + std::to_string(*id) + " has no node refs");
        RawElement way = RawElement::way(*id, delta_decode(refs));
        decode_tags(keys, vals, block, enc.offset, way.tags);
        out.push_back(std::move(way));
    }
    return out;
}

std::vector<RawElement> decode_relations(const PrimitiveGroup& group, const PrimitiveBlockView& block) {
    std::vector<RawElement> out;
    for (const Encoded& enc : group.relations) {
        std::optional<std::int64_t> id;
        std::vector<std::uint32_t> keys, vals, types;
        std::vector<std::int32_t> roles;
        std::vector<std::int64_t> memids;
        wire::Reader r(enc.bytes, enc.offset);
        wire::Field f;
        while (r.next(f)) {
            switch (f.number) {
            case 1: id = wire::as_int64(f); break;
            case 2: wire::append_repeated<std::uint32_t, false>(f, keys); break;
            case 3: wire::append_repeated<std::uint32_t, false>(f, vals); break;
            case 8: wire::append_repeated<std::int32_t, false>(f, roles); break;
            case 9: wire::append_repeated<std::int64_t, true>(f, memids); break;
            case 10: wire::append_repeated<std::uint32_t, false>(f, types); break;
            default: break;
            }
        }
        if (!id) throw DecodeError("relation missing id", enc.offset, 1);
        if (roles.size() != memids.size() || types.size() != memids.size())
            throw DecodeError("relation member arrays differ in length", enc.offset, 9);
        const auto refs = delta_decode(memids);
        std::vector<RelationMember> members;
        members.reserve(refs.size());
        for (std::size_t i = 0; i < refs.size(); ++i) {
            if (types[i] > 2) throw DecodeError("unknown relation member type", enc.offset, 10);
            if (roles[i] < 0) throw DecodeError("negative string table index", enc.offset, 8);
            members.push_back({static_cast<MemberType>(types[i]), refs[i],
                               block.string_at(static_cast<std::uint64_t>(roles[i]), enc.offset)});
        }
        RawElement rel = RawElement::relation(*id, std::move(members));
        decode_tags(keys, vals, block, enc.offset, rel.tags);
        out.push_back(std::move(rel));
    }
    return out;
}

std::vector<RawElement> decode_block_elements(ByteView payload) {
    const PrimitiveBlockView block = decode_primitive_block(payload);
    std::vector<RawElement> out;
    auto append = [&out](std::vector<RawElement>&& v) {
        std::move(v.begin(), v.end(), std::back_inserter(out));
    };
    for (const PrimitiveGroup& g : block.groups) {
        append(decode_nodes(g, block));
        append(decode_dense_nodes(g, block));
        append(decode_ways(g, block));
        append(decode_relations(g, block));
    }
    return out;
}

bool is_closed_way(const RawElement& way) {
    return way.kind == ElementKind::Way && way.refs.size() >= 4 && way.refs.front() == way.refs.back();
}

bool passes_structure_filter(const RawElement& e) {
    switch (e.kind) {
    case ElementKind::Node: return !e.tags.empty();
    case ElementKind::Way: return is_closed_way(e);
    case ElementKind::Relation: return false;
    }
    return false;
}

std::vector<RawElement> filter_structures(std::span<const RawElement> elements) {
    std::vector<RawElement> out;
    std::copy_if(elements.begin(), elements.end(), std::back_inserter(out), passes_structure_filter);
    return out;
}

FileContents read_file(std::istream& in, unsigned threads, WarningCounters* warnings) {
    FileContents contents;
    BlobFrameReader reader(in, warnings);
    const std::size_t batch = std::max(1u, threads) * 2;
    bool seen_header = false;

    auto decode_one = [](BlobFrameReader::Pending p) {
        BlobFrame frame = decompress(std::move(p));
        if (frame.header_type == kHeaderType) return std::make_pair(std::move(frame), std::vector<RawElement>{});
        auto elements = decode_block_elements(frame.payload);
        frame.payload.clear();
        return std::make_pair(std::move(frame), std::move(elements));
    };

    while (true) {
        std::vector<BlobFrameReader::Pending> pending;
        while (pending.size() < batch) {
            auto p = reader.next_pending();
            if (!p) break;
            pending.push_back(std::move(*p));
        }
        if (pending.empty()) break;

        std::vector<std::pair<BlobFrame, std::vector<RawElement>>> results;
        results.reserve(pending.size());
        if (threads <= 1) {
            for (auto& p : pending) results.push_back(decode_one(std::move(p)));
        } else {
            std::vector<std::future<std::pair<BlobFrame, std::vector<RawElement>>>> futures;
            for (auto& p : pending) futures.push_back(std::async(std::launch::async, decode_one, std::move(p)));
            for (auto& fut : futures) results.push_back(fut.get());
        }

        for (auto& [frame, elements] : results) {
            ++contents.stats.frames;
            if (frame.header_type == kHeaderType) {
                if (seen_header) warn(warnings, "pbf.duplicate_header");
                contents.header = decode_header_block(frame.payload);
                seen_header = true;
                continue;
            }
            for (RawElement& e : elements) {
                switch (e.kind) {
                case ElementKind::Node:
                    ++contents.stats.nodes;
                    contents.node_index[e.id] = *e.coordinates;
                    break;
                case ElementKind::Way: ++contents.stats.ways; break;
                case ElementKind::Relation: ++contents.stats.relations; break;
                }
                if (passes_structure_filter(e)) contents.structures.push_back(std::move(e));
            }
        }
    }
    if (!seen_header && contents.stats.frames > 0) warn(warnings, "pbf.missing_header");
    return contents;
}

}  // namespace osmfac::pbf
