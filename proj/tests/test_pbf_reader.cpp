#include <limits>
#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "osmfac/pbf_reader.hpp"
#include "pbf_writer.hpp"

using namespace osmfac;
using namespace osmfac::testing;

namespace {

std::istringstream stream_of(const Bytes& b) {
    return std::istringstream(std::string(b.begin(), b.end()));
}

Bytes concat(std::initializer_list<Bytes> parts) {
    Bytes out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

ProtoWriter string_table(std::initializer_list<std::string_view> strings) {
    ProtoWriter t;
    for (auto s : strings) t.field_string(1, s);
    return t;
}

// Hand-built block with one dense group.
Bytes dense_block(std::vector<std::int64_t> id_deltas, std::vector<std::uint64_t> kv,
                  std::initializer_list<std::string_view> strings = {"", "amenity", "school"}) {
    ProtoWriter dense;
    dense.packed_sint(1, id_deltas);
    std::vector<std::int64_t> zeros(id_deltas.size(), 0);
    dense.packed_sint(8, zeros);
    dense.packed_sint(9, zeros);
    if (!kv.empty()) dense.packed_uint(10, kv);
    ProtoWriter group;
    group.field_message(2, dense);
    ProtoWriter block;
    block.field_message(1, string_table(strings));
    block.field_message(2, group);
    return block.bytes();
}

Bytes way_block(std::vector<std::int64_t> ref_deltas, std::vector<std::uint64_t> keys = {},
                std::vector<std::uint64_t> vals = {}) {
    ProtoWriter way;
    way.field_varint(1, 42);
    if (!keys.empty()) way.packed_uint(2, keys);
    if (!vals.empty()) way.packed_uint(3, vals);
    if (!ref_deltas.empty()) way.packed_sint(8, ref_deltas);
    ProtoWriter group;
    group.field_message(3, way);
    ProtoWriter block;
    block.field_message(1, string_table({"", "building", "yes"}));
    block.field_message(2, group);
    return block.bytes();
}

std::vector<RawElement> decode_all(const Bytes& file) {
    auto in = stream_of(file);
    std::vector<RawElement> out;
    for (const auto& frame : pbf::read_blob_frames(in)) {
        if (frame.header_type != pbf::kDataType) continue;
        auto els = pbf::decode_block_elements(frame.payload);
        out.insert(out.end(), els.begin(), els.end());
    }
    return out;
}

}  // namespace

TEST_CASE("read_blob_frames yields header then data") {
    const Bytes file = encode_pbf(std::vector<RawElement>{RawElement::node(1, {1, 2}, {})});
    auto in = stream_of(file);
    const auto frames = pbf::read_blob_frames(in);
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].header_type == "OSMHeader");
    CHECK(frames[1].header_type == "OSMData");
    CHECK(frames[0].file_offset == 0);
    CHECK(frames[1].file_offset > 0);
    const auto header = pbf::decode_header_block(frames[0].payload);
    CHECK(header.writing_program == "osmfac-test");
}

TEST_CASE("raw payload passes through unchanged") {
    const Bytes payload{'h', 'e', 'l', 'l', 'o', 0, 1, 2};
    auto in = stream_of(encode_frame("OSMData", payload, Compression::Raw));
    const auto frames = pbf::read_blob_frames(in);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].payload == payload);
}

TEST_CASE("zlib payload is inflated") {
    Bytes payload(5000);
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(i % 7);
    auto in = stream_of(encode_frame("OSMData", payload, Compression::Zlib));
    const auto frames = pbf::read_blob_frames(in);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].payload == payload);
    CHECK(frames[0].declared_raw_size == 5000);
}

TEST_CASE("raw size mismatch is an integrity error") {
    const Bytes payload(99, 'x');
    auto zin = stream_of(encode_frame("OSMData", payload, Compression::Zlib, 100));
    CHECK_THROWS_AS(pbf::read_blob_frames(zin), IntegrityError);
    auto rin = stream_of(encode_frame("OSMData", payload, Compression::Raw, 100));
    CHECK_THROWS_AS(pbf::read_blob_frames(rin), IntegrityError);
    auto small = stream_of(encode_frame("OSMData", payload, Compression::Zlib, 98));
    CHECK_THROWS_AS(pbf::read_blob_frames(small), IntegrityError);
}

TEST_CASE("unsupported compression names the variant") {
    const Bytes payload(10, 'x');
    auto in = stream_of(encode_frame("OSMData", payload, Compression::Lzma));
    try {
        pbf::read_blob_frames(in);
        FAIL("expected UnsupportedCompression");
    } catch (const UnsupportedCompression& e) {
        CHECK(e.variant() == "lzma");
    }
    auto zin = stream_of(encode_frame("OSMData", payload, Compression::Zstd));
    try {
        pbf::read_blob_frames(zin);
        FAIL("expected UnsupportedCompression");
    } catch (const UnsupportedCompression& e) {
        CHECK(e.variant() == "zstd");
    }
}

TEST_CASE("truncated stream reports a byte offset") {
    const Bytes file = encode_pbf(std::vector<RawElement>{RawElement::node(1, {1, 2}, {{"a", "b"}})});
    const std::size_t header_frame_len = encode_frame("OSMHeader", encode_header_block(), Compression::Zlib).size();
    for (std::size_t cut : {header_frame_len + 2, header_frame_len + 7, file.size() - 1}) {
        Bytes truncated(file.begin(), file.begin() + static_cast<std::ptrdiff_t>(cut));
        auto in = stream_of(truncated);
        try {
            pbf::read_blob_frames(in);
            FAIL("expected DecodeError");
        } catch (const DecodeError& e) {
            CHECK(e.offset() >= header_frame_len);
            CHECK(e.offset() <= cut);
        }
    }
}

TEST_CASE("unknown blob types are skipped and counted") {
    const Bytes file = concat({encode_frame("OSMHeader", encode_header_block(), Compression::Raw),
                               encode_frame("Mystery", Bytes{1, 2, 3}, Compression::Raw),
                               encode_frame("OSMData", encode_primitive_block({}), Compression::Raw)});
    auto in = stream_of(file);
    WarningCounters w;
    const auto frames = pbf::read_blob_frames(in, &w);
    REQUIRE(frames.size() == 2);
    CHECK(frames[1].header_type == "OSMData");
    CHECK(w.get("pbf.unknown_blob_type") == 1);
}

TEST_CASE("oversized blob header is rejected") {
    Bytes b{0x00, 0x02, 0x00, 0x00};
    auto in = stream_of(b);
    CHECK_THROWS_AS(pbf::read_blob_frames(in), DecodeError);
}

TEST_CASE("unsupported required feature") {
    ProtoWriter h;
    h.field_string(4, "OsmSchema-V0.6");
    h.field_string(4, "HistoricalInformation");
    CHECK_THROWS_AS(pbf::decode_header_block(h.bytes()), DecodeError);
}

TEST_CASE("decode_primitive_block defaults and string table") {
    ProtoWriter block;
    block.field_message(1, string_table({"", "amenity", "school"}));
    const auto view = pbf::decode_primitive_block(block.bytes());
    CHECK(view.granularity == 100);
    CHECK(view.lat_offset == 0);
    CHECK(view.lon_offset == 0);
    REQUIRE(view.string_table.size() == 3);
    CHECK(view.string_table[0].empty());
    CHECK(view.string_table[2] == "school");
    CHECK(view.groups.empty());
}

TEST_CASE("decode_primitive_block explicit scaling") {
    ProtoWriter block;
    block.field_message(1, string_table({""}));
    block.field_varint(17, 1000);
    block.field_varint(19, 50);
    block.field_varint(20, static_cast<std::uint64_t>(-70LL));
    const auto view = pbf::decode_primitive_block(block.bytes());
    CHECK(view.granularity == 1000);
    CHECK(view.lat_offset == 50);
    CHECK(view.lon_offset == -70);
}

TEST_CASE("decode_primitive_block errors") {
    SUBCASE("non-empty string table entry 0") {
        ProtoWriter block;
        block.field_message(1, string_table({"x", "y"}));
        CHECK_THROWS_AS(pbf::decode_primitive_block(block.bytes()), InvariantError);
    }
    SUBCASE("granularity zero") {
        ProtoWriter block;
        block.field_message(1, string_table({""}));
        block.field_varint(17, 0);
        CHECK_THROWS_AS(pbf::decode_primitive_block(block.bytes()), DecodeError);
    }
    SUBCASE("malformed varint carries field and offset") {
        Bytes b{0x88, 0x01, 0xff};  // field 17 varint, value truncated
        try {
            pbf::decode_primitive_block(b);
            FAIL("expected DecodeError");
        } catch (const DecodeError& e) {
            CHECK(e.offset() == 2);
            CHECK(e.field() == 17);
        }
    }
}

TEST_CASE("delta_decode") {
    CHECK(pbf::delta_decode(std::vector<std::int64_t>{100, 5, -3}) == std::vector<std::int64_t>{100, 105, 102});
    CHECK(pbf::delta_decode(std::vector<std::int64_t>{}).empty());
    CHECK(pbf::delta_decode(std::vector<std::int64_t>{7}) == std::vector<std::int64_t>{7});
    const std::int64_t max = std::numeric_limits<std::int64_t>::max();
    CHECK_THROWS_AS(pbf::delta_decode(std::vector<std::int64_t>{max, 1}), OverflowError);
    CHECK_THROWS_AS(pbf::delta_decode(std::vector<std::int64_t>{std::numeric_limits<std::int64_t>::min(), -1}),
                    OverflowError);
}

TEST_CASE("delta_decode inverts differencing") {
    Rng rng(3);
    for (int round = 0; round < 300; ++round) {
        std::vector<std::int64_t> xs;
        const std::size_t n = pick(rng, 50);
        for (std::size_t i = 0; i < n; ++i) xs.push_back(static_cast<std::int64_t>(rng() >> 2) - (1LL << 61));
        std::vector<std::int64_t> diffs;
        for (std::size_t i = 0; i < xs.size(); ++i) diffs.push_back(i ? xs[i] - xs[i - 1] : xs[i]);
        CHECK(pbf::delta_decode(diffs) == xs);
    }
}

TEST_CASE("to_degrees") {
    CHECK(pbf::to_degrees(450000000, 100, 0) == 45.0);
    CHECK(pbf::to_degrees(0, 100, 0) == 0.0);
    CHECK(pbf::to_degrees(0, 7, 0) == 0.0);
    CHECK(pbf::to_degrees(1, 100, 50) == doctest::Approx(1.5e-7).epsilon(1e-12));
    CHECK(pbf::to_degrees(-1800000000, 100, 0) == -180.0);
}

TEST_CASE("to_degrees is monotone in raw") {
    Rng rng(5);
    for (int i = 0; i < 5000; ++i) {
        const std::int32_t gran = static_cast<std::int32_t>(1 + pick(rng, 10000));
        const std::int64_t offset = static_cast<std::int64_t>(pick(rng, 2000000)) - 1000000;
        std::int64_t a = static_cast<std::int64_t>(pick(rng, 4000000000)) - 2000000000;
        std::int64_t b = static_cast<std::int64_t>(pick(rng, 4000000000)) - 2000000000;
        if (a > b) std::swap(a, b);
        CHECK(pbf::to_degrees(a, gran, offset) <= pbf::to_degrees(b, gran, offset));
    }
}

TEST_CASE("decode_dense_nodes") {
    SUBCASE("ids and per-node tag segments") {
        const auto els = pbf::decode_block_elements(dense_block({10, 1, 2}, {1, 2, 0, 0, 0}));
        REQUIRE(els.size() == 3);
        CHECK(els[0].id == 10);
        CHECK(els[1].id == 11);
        CHECK(els[2].id == 13);
        CHECK(els[0].tags == TagMap{{"amenity", "school"}});
        CHECK(els[1].tags.empty());
        CHECK(els[2].tags.empty());
        CHECK(els[0].kind == ElementKind::Node);
        CHECK(els[0].coordinates == LatLon{0, 0});
    }
    SUBCASE("empty group") {
        const Bytes b = dense_block({}, {});
        const auto view = pbf::decode_primitive_block(b);
        REQUIRE(view.groups.size() == 1);
        CHECK(pbf::decode_dense_nodes(view.groups[0], view).empty());
    }
    SUBCASE("string index out of range") {
        CHECK_THROWS_AS(pbf::decode_block_elements(dense_block({10}, {99, 2, 0})), DecodeError);
    }
    SUBCASE("key/value stream exhausted early") {
        CHECK_THROWS_AS(pbf::decode_block_elements(dense_block({10, 1, 2}, {1, 2, 0})), DecodeError);
    }
    SUBCASE("stream ends inside a pair") {
        CHECK_THROWS_AS(pbf::decode_block_elements(dense_block({10}, {1})), DecodeError);
    }
    SUBCASE("trailing data after last node") {
        CHECK_THROWS_AS(pbf::decode_block_elements(dense_block({10}, {0, 1, 2, 0})), DecodeError);
    }
    SUBCASE("coordinates out of range") {
        ProtoWriter dense;
        dense.packed_sint(1, std::vector<std::int64_t>{1});
        dense.packed_sint(8, std::vector<std::int64_t>{910000000});
        dense.packed_sint(9, std::vector<std::int64_t>{0});
        ProtoWriter group;
        group.field_message(2, dense);
        ProtoWriter block;
        block.field_message(1, string_table({""}));
        block.field_message(2, group);
        CHECK_THROWS_AS(pbf::decode_block_elements(block.bytes()), DecodeError);
    }
}

TEST_CASE("decode_ways") {
    SUBCASE("ref deltas") {
        const auto els = pbf::decode_block_elements(way_block({5, 1, 1, -2}));
        REQUIRE(els.size() == 1);
        CHECK(els[0].kind == ElementKind::Way);
        CHECK(els[0].refs == std::vector<std::int64_t>{5, 6, 7, 5});
    }
    SUBCASE("zero refs") {
        CHECK_THROWS_AS(pbf::decode_block_elements(way_block({})), InvariantError);
    }
    SUBCASE("tags through the string table") {
        const auto els = pbf::decode_block_elements(way_block({1}, {1}, {2}));
        REQUIRE(els.size() == 1);
        CHECK(els[0].tags == TagMap{{"building", "yes"}});
    }
    SUBCASE("keys/vals mismatch") {
        CHECK_THROWS_AS(pbf::decode_block_elements(way_block({1}, {1}, {})), DecodeError);
    }
    SUBCASE("value index out of range") {
        CHECK_THROWS_AS(pbf::decode_block_elements(way_block({1}, {1}, {3})), DecodeError);
    }
}

TEST_CASE("plain nodes and relations decode") {
    const std::vector<RawElement> els{
        RawElement::node(-5, {12.5, -3.25}, {{"name", "Lycée"}}),
        RawElement::relation(9, {{MemberType::Way, 4, "outer"}, {MemberType::Node, -2, ""}}, {{"type", "multipolygon"}})};
    EncodeOptions o;
    o.dense_nodes = false;
    CHECK(pbf::decode_block_elements(encode_primitive_block(els, o)) == els);
}

TEST_CASE("is_closed_way") {
    CHECK(pbf::is_closed_way(RawElement::way(1, {5, 6, 7, 5})));
    CHECK_FALSE(pbf::is_closed_way(RawElement::way(1, {5, 6, 5})));
    CHECK_FALSE(pbf::is_closed_way(RawElement::way(1, {5, 6, 7, 8})));
    CHECK_FALSE(pbf::is_closed_way(RawElement::node(1, {0, 0}, {{"a", "b"}})));
}

TEST_CASE("filter_structures") {
    const RawElement tagged = RawElement::node(1, {0, 0}, {{"amenity", "school"}});
    const RawElement untagged = RawElement::node(2, {0, 0});
    const RawElement open = RawElement::way(3, {1, 2, 3});
    const RawElement closed = RawElement::way(4, {1, 2, 3, 1});
    const RawElement relation = RawElement::relation(5, {});
    const std::vector<RawElement> in{tagged, untagged, open, closed, relation};
    CHECK(pbf::filter_structures(in) == std::vector<RawElement>{tagged, closed});
    CHECK(pbf::filter_structures(std::vector<RawElement>{relation, relation}).empty());
    CHECK(pbf::filter_structures(std::vector<RawElement>{}).empty());
}

TEST_CASE("filter_structures output is an order-preserving subsequence") {
    Rng rng(17);
    for (int round = 0; round < 200; ++round) {
        const auto in = random_element_set(rng);
        const auto out = pbf::filter_structures(in);
        std::size_t j = 0;
        for (const auto& e : in)
            if (j < out.size() && e == out[j]) ++j;
        CHECK(j == out.size());
        std::size_t expected = 0;
        for (const auto& e : in)
            expected += (e.kind == ElementKind::Node && !e.tags.empty()) || pbf::is_closed_way(e);
        CHECK(out.size() == expected);
    }
}

TEST_CASE("round trip through the fixture encoder") {
    Rng rng(1234);
    for (int round = 0; round < 100; ++round) {
        const auto elements = random_element_set(rng);
        EncodeOptions o;
        o.elements_per_block = 1 + pick(rng, 30);
        o.dense_nodes = pick(rng, 4) != 0;
        o.compression = pick(rng, 2) ? Compression::Zlib : Compression::Raw;
        CHECK(decode_all(encode_pbf(elements, o)) == elements);
    }
}

TEST_CASE("round trip with coarse granularity and offsets") {
    EncodeOptions o;
    o.granularity = 1000;
    o.lat_offset = 400;
    o.lon_offset = -300;
    const std::vector<RawElement> els{RawElement::node(1, {pbf::to_degrees(12345, 1000, 400), pbf::to_degrees(-999, 1000, -300)}),
                                      RawElement::node(2, {pbf::to_degrees(-90000000, 1000, 400), pbf::to_degrees(0, 1000, -300)},
                                                       {{"k", "v"}})};
    CHECK(decode_all(encode_pbf(els, o)) == els);
}

TEST_CASE("read_file keeps file order and indexes every node") {
    Rng rng(99);
    ElementSetOptions eo;
    eo.max_nodes = 200;
    eo.max_ways = 40;
    const auto elements = random_element_set(rng, eo);
    EncodeOptions o;
    o.elements_per_block = 13;
    const Bytes file = encode_pbf(elements, o);
    for (unsigned threads : {1u, 4u}) {
        auto in = stream_of(file);
        WarningCounters w;
        const auto contents = pbf::read_file(in, threads, &w);
        CHECK(contents.structures == pbf::filter_structures(elements));
        std::size_t nodes = 0;
        for (const auto& e : elements) {
            if (e.kind != ElementKind::Node) continue;
            ++nodes;
            REQUIRE(contents.node_index.count(e.id) == 1);
            CHECK(contents.node_index.at(e.id) == *e.coordinates);
        }
        CHECK(contents.stats.nodes == nodes);
        CHECK(contents.stats.decoded() == elements.size());
        CHECK(w.total() == 0);
    }
}

TEST_CASE("read_file on a header-only file") {
    const Bytes file = encode_pbf(std::vector<RawElement>{});
    auto in = stream_of(file);
    const auto contents = pbf::read_file(in);
    CHECK(contents.structures.empty());
    CHECK(contents.stats.decoded() == 0);
}

TEST_CASE("random bytes only raise library errors") {
    Rng rng(2024);
    for (int i = 0; i < 2000; ++i) {
        Bytes b(pick(rng, 64));
        for (auto& x : b) x = static_cast<std::uint8_t>(rng());
        try {
            pbf::decode_block_elements(b);
        } catch (const Error&) {
        }
        auto in = stream_of(b);
        try {
            pbf::read_file(in);
        } catch (const Error&) {
        }
    }
}
