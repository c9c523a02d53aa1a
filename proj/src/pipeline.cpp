#include "osmfac/pipeline.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "osmfac/pbf_reader.hpp"
#include "osmfac/table_io.hpp"
#include "osmfac/text.hpp"

namespace osmfac {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::string hex;
    for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

void require_readable(const fs::path& path, std::string_view what) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw Error(std::string(what) + " not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(std::string(what) + " not readable: " + path.string());
}

ordered_json counts_json(const CountStats& s) {
    return {{"total", s.total}, {"schools", s.schools}, {"clinics", s.clinics}, {"other", s.other},
            {"unresolved", s.unresolved}};
}

CountStats sum(std::span<const CountStats> rows) {
    CountStats total;
    for (const auto& r : rows) total += r;
    return total;
}

std::string opt_number(const std::optional<double>& v, std::optional<int> precision) {
    return v ? format_number(*v, precision) : std::string{};
}

void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + path.string());
}

std::string timestamp_utc() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;
    void add(std::string_view name, std::string content) { files.emplace_back(std::string(name), std::move(content)); }
};

}  // namespace

InputSpec parse_input_spec(std::string_view arg) {
    InputSpec spec;
    const auto eq = arg.rfind('=');
    if (eq != std::string_view::npos && eq + 1 < arg.size()) {
        spec.path = std::string(arg.substr(0, eq));
        spec.country = std::string(arg.substr(eq + 1));
    } else {
        spec.path = std::string(arg);
        const std::string file = spec.path.filename().string();
        spec.country = file.substr(0, file.find('.'));
    }
    return spec;
}

void validate(const PipelineConfig& c) {
    if (c.inputs.empty()) throw ConfigError("at least one input PBF is required");
    for (const auto& in : c.inputs)
        if (in.country.empty()) throw ConfigError("input " + in.path.string() + " has an empty country label");
    if (c.output_dir.empty()) throw ConfigError("output directory is required");
    for (auto t : c.missing_thresholds)
        if (t < 0) throw ConfigError("missing-area thresholds must be non-negative");
    if (c.missing_level < 0 || c.missing_level >= static_cast<int>(kAdminLevels))
        throw ConfigError("missing-area level must be 0..3");
    if (c.table_precision && (*c.table_precision < 0 || *c.table_precision > 15))
        throw ConfigError("table precision must be 0..15");
}

std::string format_number(double value, std::optional<int> precision) {
    if (precision) {
        std::string s = fmt::format("{:.{}f}", round_to(value, *precision), *precision);
        if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
        return s;
    }
    return fmt::format("{}", value);
}

std::string facilities_geojson(std::span<const FacilityRecord> records) {
    std::string out = "{\"type\":\"FeatureCollection\",\"features\":[";
    bool first = true;
    for (const FacilityRecord& r : records) {
        if (!r.outcome.cls.is_facility() || !r.location) continue;
        ordered_json props;
        props["element_id"] = r.element_id;
        props["element_kind"] = to_string(r.element_kind);
        props["country"] = r.country;
        props["class"] = to_string(r.outcome.cls.top());
        props["category"] = r.outcome.cls.category_name();
        props["provenance"] = to_string(r.outcome.provenance);
        props["topic"] = r.outcome.topic ? ordered_json(to_string(*r.outcome.topic)) : ordered_json(nullptr);
        props["matched_token"] = r.outcome.matched_token ? ordered_json(*r.outcome.matched_token) : ordered_json(nullptr);
        for (std::size_t level = 0; level < kAdminLevels; ++level) {
            const auto& id = r.admin_ids[level];
            props[fmt::format("admin_id_{}", level)] = id ? ordered_json(*id) : ordered_json(nullptr);
        }
        ordered_json feature;
        feature["type"] = "Feature";
        // GeoJSON positions are [lon, lat].
        feature["geometry"] = {{"type", "Point"}, {"coordinates", {r.location->lon, r.location->lat}}};
        feature["properties"] = std::move(props);
        out += first ? "\n" : ",\n";
        out += feature.dump();
        first = false;
    }
    out += first ? "]}\n" : "\n]}\n";
    return out;
}

std::string proportions_csv(std::span<const CountStats> structured, std::optional<int> precision) {
    std::string out = "country,schools_pct,clinics_pct,unresolved_pct,other_pct\n";
    std::vector<double> s, c, u, o;
    for (const CountStats& row : structured) {
        const Proportions p = proportions(row);
        s.push_back(p.schools);
        c.push_back(p.clinics);
        u.push_back(p.unresolved);
        o.push_back(p.other);
        out += fmt::format("{},{},{},{},{}\n", csv_field(row.group), format_number(p.schools, precision),
                           format_number(p.clinics, precision), format_number(p.unresolved, precision),
                           format_number(p.other, precision));
    }
    if (!structured.empty())
        out += fmt::format("Median,{},{},{},{}\n", format_number(median(s), precision),
                           format_number(median(c), precision), format_number(median(u), precision),
                           format_number(median(o), precision));
    return out;
}

std::string densities_csv(std::span<const CountryDensityRow> rows, std::optional<int> precision) {
    std::string out =
        "country,population,total,keys_schools,keys_clinics,keys_unresolved,keys_other,"
        "topic_schools,topic_clinics,topic_unresolved,topic_other\n";
    std::array<std::vector<double>, 9> columns;
    for (const CountryDensityRow& row : rows) {
        out += csv_field(row.country);
        if (!row.population || *row.population == 0) {
            out += fmt::format(",{},,,,,,,,,\n", row.population ? "0" : "");
            continue;
        }
        const DensityStats k = densities(row.structured, *row.population);
        const DensityStats t = densities(row.enriched, *row.population);
        const std::array<double, 9> values{k.total,      k.schools, k.clinics, k.unresolved, k.other,
                                           t.schools, t.clinics, t.unresolved, t.other};
        out += fmt::format(",{}", *row.population);
        for (std::size_t i = 0; i < values.size(); ++i) {
            columns[i].push_back(values[i]);
            out += ',' + format_number(values[i], precision);
        }
        out += '\n';
    }
    if (!rows.empty()) {
        out += "Median,";
        for (const auto& col : columns) out += ',' + (col.empty() ? std::string{} : format_number(median(col), precision));
        out += '\n';
    }
    return out;
}

std::string who_comparison_csv(const ComparisonResult& result, std::optional<int> precision) {
    std::string out = "country,osm_clinics,who_clinics,ratio,status,osm_clinics_keys_only\n";
    for (const ComparisonRow& r : result.rows)
        out += fmt::format("{},{},{},{},{},{}\n", csv_field(r.country), r.osm_clinics, r.who_clinics,
                           opt_number(r.ratio, precision), to_string(r.status), r.osm_clinics_keys_only);
    return out;
}

int run_pipeline(const PipelineConfig& config, std::ostream& log) {
    const auto started = std::chrono::steady_clock::now();
    try {
        validate(config);

        for (const auto& in : config.inputs) require_readable(in.path, "input PBF");
        if (config.admin_geojson) require_readable(*config.admin_geojson, "admin GeoJSON");
        if (config.population_csv) require_readable(*config.population_csv, "population CSV");
        if (config.who_csv) require_readable(*config.who_csv, "WHO CSV");
        for (const auto* p : {&config.lexicon, &config.key_schema, &config.topic_rules, &config.country_aliases})
            if (*p) require_readable(**p, "table");

        const KeySchema schema = config.key_schema ? KeySchema::load(*config.key_schema) : KeySchema::builtin();
        const Lexicon lexicon = config.lexicon ? Lexicon::load(*config.lexicon) : Lexicon::builtin();
        const RuleTopicModel model =
            config.topic_rules ? RuleTopicModel::load(*config.topic_rules) : reference_topic_model();
        const CountryAliases aliases = config.country_aliases
                                           ? CountryAliases::parse(read_file_text(*config.country_aliases))
                                           : CountryAliases::builtin();

        WarningCounters warnings;
        ordered_json manifest;
        manifest["tool"] = "osmfac";
        manifest["version"] = OSMFAC_VERSION;
        manifest["generated_at"] = timestamp_utc();
        manifest["inputs"] = ordered_json::array();

        // Decode, filter, classify.
        std::vector<FacilityRecord> records;
        pbf::DecodeStats decoded;
        std::uint64_t filtered = 0;
        for (const InputSpec& in : config.inputs) {
            log << "decoding " << in.path.string() << " (" << in.country << ")\n";
            std::ifstream stream(in.path, std::ios::binary);
            pbf::FileContents contents;
            try {
                contents = pbf::read_file(stream, config.threads, &warnings);
            } catch (const Error& e) {
                throw Error(in.path.string() + ": " + e.what());
            }
            decoded.frames += contents.stats.frames;
            decoded.nodes += contents.stats.nodes;
            decoded.ways += contents.stats.ways;
            decoded.relations += contents.stats.relations;
            filtered += contents.structures.size();
            manifest["inputs"].push_back({{"path", in.path.string()},
                                          {"country", in.country},
                                          {"bytes", fs::file_size(in.path)},
                                          {"sha256", sha256_file(in.path)},
                                          {"frames", contents.stats.frames},
                                          {"writing_program", contents.header.writing_program}});
            if (config.stop_after == StopAfter::Decode) continue;

            const ClassifierContext ctx{schema, model, lexicon, &contents.node_index};
            for (const RawElement& e : contents.structures) {
                FacilityRecord rec = classify_element(e, ctx, &warnings);
                rec.country = in.country;
                records.push_back(std::move(rec));
            }
        }

        ordered_json stages;
        stages["decoded"] = decoded.decoded();
        stages["decoded_nodes"] = decoded.nodes;
        stages["decoded_ways"] = decoded.ways;
        stages["decoded_relations"] = decoded.relations;
        stages["filtered"] = filtered;

        Outputs outputs;
        if (config.stop_after != StopAfter::Decode) {
            std::vector<AdminArea> areas;
            if (config.admin_geojson) {
                areas = load_admin_geojson(*config.admin_geojson);
                manifest["admin"] = {{"path", config.admin_geojson->string()},
                                     {"sha256", sha256_file(*config.admin_geojson)},
                                     {"areas", areas.size()}};
            }
            if (config.population_csv) {
                apply_population_csv(areas, read_file_text(*config.population_csv), &warnings);
                manifest["population_csv"] = {{"path", config.population_csv->string()},
                                              {"sha256", sha256_file(*config.population_csv)}};
            }

            std::uint64_t located = 0;
            for (FacilityRecord& rec : records) {
                if (!rec.location) continue;
                ++located;
                const AdminAssignment a = assign_admin(*rec.location, areas, &warnings);
                for (std::size_t level = 0; level < kAdminLevels; ++level)
                    if (a[level]) rec.admin_ids[level] = areas[*a[level]].id;
            }

            const auto by_country_keys = tally(records, Grouping::country(), Stage::Structured);
            const auto by_country = tally(records, Grouping::country(), Stage::Enriched);
            stages["classified"] = records.size();
            stages["located"] = located;
            stages["unlocated"] = records.size() - located;
            stages["structured"] = counts_json(sum(by_country_keys));
            stages["enriched"] = counts_json(sum(by_country));

            outputs.add(kFacilitiesGeojson, facilities_geojson(records));
            std::string unlocated = "element_id,element_kind,country,class,category,provenance\n";
            for (const FacilityRecord& r : records) {
                if (r.location || !r.outcome.cls.is_facility()) continue;
                unlocated += fmt::format("{},{},{},{},{},{}\n", r.element_id, to_string(r.element_kind),
                                         csv_field(r.country), to_string(r.outcome.cls.top()),
                                         csv_field(r.outcome.cls.category_name()), to_string(r.outcome.provenance));
            }
            outputs.add(kUnlocatedCsv, std::move(unlocated));

            if (config.stop_after == StopAfter::Stats) {
                const auto precision = config.table_precision;
                outputs.add(kProportionsCsv, proportions_csv(by_country_keys, precision));

                std::vector<CountryDensityRow> density_rows;
                for (std::size_t i = 0; i < by_country.size(); ++i) {
                    CountryDensityRow row{by_country[i].group, std::nullopt, by_country_keys[i], by_country[i]};
                    const std::string label = text::fold(row.country);
                    for (const AdminArea& a : areas) {
                        if (a.level == 0 && (text::fold(a.id) == label || text::fold(a.name) == label)) {
                            row.population = a.population;
                            break;
                        }
                    }
                    if (!row.population || *row.population == 0) warn(&warnings, "stats.country_population_missing");
                    density_rows.push_back(std::move(row));
                }
                outputs.add(kDensitiesCsv, densities_csv(density_rows, precision));

                std::string area_csv =
                    "area_id,level,name,population,total,schools,clinics,unresolved,other,density_total,"
                    "log_density_total\n";
                std::array<std::vector<CountStats>, kAdminLevels> by_level;
                for (std::size_t level = 0; level < kAdminLevels; ++level)
                    by_level[level] = tally(records, Grouping::admin_level(static_cast<int>(level)), Stage::Enriched);
                for (const AdminArea& a : areas) {
                    CountStats s;
                    for (const CountStats& c : by_level[static_cast<std::size_t>(a.level)])
                        if (c.group == a.id) s = c;
                    std::string density, log_value;
                    if (a.population > 0) {
                        const double d = density_per_100k(s.total, a.population, a.id);
                        density = format_number(d, precision);
                        log_value = opt_number(log_density(d), precision);
                    }
                    area_csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(a.id), a.level,
                                            csv_field(a.name), a.population, s.total, s.schools, s.clinics,
                                            s.unresolved, s.other, density, log_value);
                }
                outputs.add(kAreaStatsCsv, std::move(area_csv));

                std::string missing = "threshold,area_id,name,level,population,total,flagged\n";
                ordered_json mean_pop = ordered_json::object();
                const auto& level_stats = by_level[static_cast<std::size_t>(config.missing_level)];
                for (std::int64_t t : config.missing_thresholds) {
                    const auto flags = flag_missing(areas, config.missing_level, level_stats,
                                                    static_cast<std::uint64_t>(t));
                    std::uint64_t flagged = 0;
                    for (const AreaFlag& f : flags) {
                        flagged += f.flagged;
                        missing += fmt::format("{},{},{},{},{},{},{}\n", t, csv_field(f.area->id),
                                               csv_field(f.area->name), f.area->level, f.area->population, f.total,
                                               f.flagged ? 1 : 0);
                    }
                    mean_pop[std::to_string(t)] = {
                        {"flagged_areas", flagged},
                        {"mean_population", flagged ? ordered_json(mean_population_flagged(flags)) : ordered_json(nullptr)}};
                }
                outputs.add(kMissingAreasCsv, std::move(missing));
                manifest["missing_areas"] = {{"level", config.missing_level}, {"thresholds", mean_pop}};

                if (config.who_csv) {
                    const auto who = parse_who_csv(read_file_text(*config.who_csv), config.who_columns, &warnings);
                    const auto cmp = compare_counts(by_country, by_country_keys, who, aliases,
                                                    {config.who_include_types});
                    outputs.add(kWhoComparisonCsv, who_comparison_csv(cmp, precision));
                    std::uint64_t matched = 0;
                    for (const auto& r : cmp.rows) matched += r.who_clinics;
                    manifest["who"] = {
                        {"path", config.who_csv->string()},
                        {"sha256", sha256_file(*config.who_csv)},
                        {"records", who.size()},
                        {"records_matched", matched},
                        {"unmatched_countries", cmp.unmatched_who},
                        {"unmatched_osm_countries", cmp.unmatched_osm},
                        {"caveat",
                         "the WHO list covers public facilities only; private and specialized facilities are "
                         "excluded, so OSM counts are not strictly comparable"}};
                }
            }
        }

        manifest["stage_counts"] = stages;
        manifest["warnings"] = warnings.all();
        manifest["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        outputs.add(kManifestJson, manifest.dump(2) + "\n");

        fs::create_directories(config.output_dir);
        for (const auto& [name, content] : outputs.files) write_file(config.output_dir / name, content);
        log << "wrote " << outputs.files.size() << " files to " << config.output_dir.string() << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}

}  // namespace osmfac
