// osmfac: extract schools and clinics from OSM PBF extracts and compute
// coverage statistics.
//
//   osmfac -i benin-latest.osm.pbf=Benin --admin admin.geojson -o out/
//   osmfac --config run.ini

#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "osmfac/pipeline.hpp"

int main(int argc, char** argv) {
    using namespace osmfac;

    CLI::App app{"Extract schools and health clinics from OpenStreetMap PBF extracts"};
    app.set_config("--config", "", "key=value configuration file; command-line flags override it");

    std::vector<std::string> inputs;
    std::string admin, population, lexicon, key_schema, topic_rules, aliases, who, output;
    std::vector<std::int64_t> thresholds{2, 10};
    int missing_level = 3;
    std::optional<int> precision;
    std::string stage = "stats";
    unsigned threads = 1;
    WhoColumns who_columns;
    std::vector<std::string> who_types;

    app.add_option("-i,--input", inputs, "Input .osm.pbf file, optionally PATH=CountryLabel")->required();
    app.add_option("-o,--output", output, "Output directory")->required();
    app.add_option("--admin", admin, "Admin boundaries GeoJSON (properties id, level, name, population)");
    app.add_option("--population", population, "Population override CSV (area_id, population)");
    app.add_option("--lexicon", lexicon, "Facility lexicon TSV (default: built-in)");
    app.add_option("--key-schema", key_schema, "Structured key schema TSV (default: built-in)");
    app.add_option("--topic-rules", topic_rules, "Topic model rule table TSV (default: built-in)");
    app.add_option("--country-aliases", aliases, "Country alias TSV (default: built-in)");
    app.add_option("--who", who, "WHO health facility CSV");
    app.add_option("--who-country-column", who_columns.country, "WHO CSV country column")->capture_default_str();
    app.add_option("--who-name-column", who_columns.name, "WHO CSV facility name column")->capture_default_str();
    app.add_option("--who-type-column", who_columns.facility_type, "WHO CSV facility type column")->capture_default_str();
    app.add_option("--who-lat-column", who_columns.lat, "WHO CSV latitude column")->capture_default_str();
    app.add_option("--who-lon-column", who_columns.lon, "WHO CSV longitude column")->capture_default_str();
    app.add_option("--who-type", who_types, "Only count WHO rows of these facility types");
    app.add_option("--missing-threshold", thresholds, "Flag areas with at most this many records")->capture_default_str();
    app.add_option("--missing-level", missing_level, "Admin level used for missing-area flags")->capture_default_str();
    app.add_option("--table-precision", precision, "Round table values to this many decimals");
    app.add_option("--stage", stage, "Stop after: decode, classify or stats")
        ->check(CLI::IsMember({"decode", "classify", "stats"}))
        ->capture_default_str();
    app.add_option("--threads", threads, "Blob decoding threads")->check(CLI::Range(1u, 256u))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfigError;
    }

    PipelineConfig config;
    for (const auto& arg : inputs) config.inputs.push_back(parse_input_spec(arg));
    config.output_dir = output;
    auto opt_path = [](const std::string& s) -> std::optional<std::filesystem::path> {
        if (s.empty()) return std::nullopt;
        return std::filesystem::path(s);
    };
    config.admin_geojson = opt_path(admin);
    config.population_csv = opt_path(population);
    config.lexicon = opt_path(lexicon);
    config.key_schema = opt_path(key_schema);
    config.topic_rules = opt_path(topic_rules);
    config.country_aliases = opt_path(aliases);
    config.who_csv = opt_path(who);
    config.who_columns = who_columns;
    config.who_include_types = who_types;
    config.missing_thresholds = thresholds;
    config.missing_level = missing_level;
    config.table_precision = precision;
    static const std::map<std::string, StopAfter> kStages{
        {"decode", StopAfter::Decode}, {"classify", StopAfter::Classify}, {"stats", StopAfter::Stats}};
    config.stop_after = kStages.at(stage);
    config.threads = threads;

    return run_pipeline(config, std::cerr);
}
