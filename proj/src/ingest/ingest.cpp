#include "ecol2/ingest.hpp"

#include "ecol2/csv.hpp"
#include "ecol2/errors.hpp"
#include "ecol2/metric.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace ecol2 {
namespace {

struct Columns {
    int emissions = -1;
    int energy = -1;
    int duration = -1;
    int country = -1;
    int stage = -1;
};

int find(const csv::Table& t, const std::string& name) { return name.empty() ? -1 : t.column(name); }

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::string shape(const std::vector<std::vector<double>>& m) {
    return std::to_string(m.size()) + "x" + std::to_string(m.empty() ? 0 : m.front().size());
}

}  // namespace

EmissionImport import_emissions_csv(const std::filesystem::path& path, const ColumnMap& map,
                                    Stage stage, const RegionRegistry& registry) {
    const csv::Table table = csv::read_file(path);
    Columns col;
    col.emissions = find(table, map.emissions);
    col.energy = find(table, map.energy);
    col.duration = find(table, map.duration);
    col.country = find(table, map.country);
    col.stage = find(table, map.stage_hint);

    std::vector<std::string> missing;
    if (col.duration < 0) {
        missing.push_back(map.duration.empty() ? "duration" : map.duration);
    }
    if (col.emissions < 0 && (col.energy < 0 || col.country < 0)) {
        if (col.emissions < 0) missing.push_back(map.emissions.empty() ? "emissions" : map.emissions);
        if (col.energy < 0) missing.push_back(map.energy.empty() ? "energy" : map.energy);
        if (col.country < 0) missing.push_back(map.country.empty() ? "country" : map.country);
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing) {
            names += names.empty() ? m : ", " + m;
        }
        throw IoError(path.string() + ": missing column(s): " + names);
    }
    if (!map.stage_hint.empty() && col.stage < 0) {
        throw IoError(path.string() + ": missing column(s): " + map.stage_hint);
    }

    EmissionImport out;
    const std::string stem = path.stem().string();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = r + 2;  // 1-based, after the header
        auto cell = [&](int c) -> std::string {
            return c >= 0 && static_cast<std::size_t>(c) < row.size() ? trim(row[c]) : std::string();
        };
        auto number = [&](int c, const std::string& name) -> std::optional<double> {
            const std::string text = cell(c);
            if (text.empty()) {
                return std::nullopt;
            }
            double v = 0.0;
            try {
                v = csv::parse_double(text);
            } catch (const IoError&) {
                throw IoError(path.string() + " row " + std::to_string(line) + ": column '" + name +
                              "' is not a number: '" + text + "'");
            }
            if (!std::isfinite(v) || v < 0.0) {
                throw IoError(path.string() + " row " + std::to_string(line) + ": column '" + name +
                              "' must be finite and non-negative");
            }
            return v;
        };

        const auto emissions = number(col.emissions, map.emissions);
        const auto energy = number(col.energy, map.energy);
        const auto duration = number(col.duration, map.duration);
        std::string region = cell(col.country);
        std::transform(region.begin(), region.end(), region.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });

        EmissionRecord rec;
        rec.stage = stage;
        if (col.stage >= 0 && !cell(col.stage).empty()) {
            try {
                rec.stage = parse_stage(cell(col.stage));
            } catch (const ParameterError& e) {
                throw IoError(path.string() + " row " + std::to_string(line) + ": " + e.what());
            }
        }
        rec.label = stem + "-row" + std::to_string(line);
        rec.duration_s = duration.value_or(0.0);
        rec.energy_kwh = energy.value_or(0.0);
        rec.region = region.empty() ? std::string(kUnknownRegion) : region;

        const bool region_known = !region.empty() && registry.contains(region);
        if (emissions) {
            rec.emissions_kg = *emissions;
            if (energy && region_known) {
                const double computed = emissions_kg(*energy, registry.lookup(region));
                const double scale = std::max(std::abs(computed), std::abs(*emissions));
                if (scale > 0.0 && std::abs(computed - *emissions) > kConsistencyTolerance * scale) {
                    std::ostringstream msg;
                    msg << path.string() << " row " << line << ": stated emissions " << *emissions
                        << " kg differ from energy x intensity " << computed << " kg by more than 5%";
                    out.warnings.push_back(msg.str());
                }
            }
        } else if (energy && region_known) {
            rec.emissions_kg = emissions_kg(*energy, registry.lookup(region));
        } else {
            throw IoError(path.string() + " row " + std::to_string(line) +
                          ": no emissions value and no energy with a known country to compute one");
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

void export_emissions_csv(const std::filesystem::path& path, const std::vector<EmissionRecord>& records,
                          const ColumnMap& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    std::vector<std::string> header;
    for (const auto* name : {&map.emissions, &map.energy, &map.duration, &map.country}) {
        if (!name->empty()) {
            header.push_back(*name);
        }
    }
    if (!map.stage_hint.empty()) {
        header.push_back(map.stage_hint);
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << csv::escape(header[i]);
    }
    out << '\n';
    for (const auto& r : records) {
        std::vector<std::string> cells;
        if (!map.emissions.empty()) cells.push_back(csv::format_double(r.emissions_kg));
        if (!map.energy.empty()) cells.push_back(csv::format_double(r.energy_kwh));
        if (!map.duration.empty()) cells.push_back(csv::format_double(r.duration_s));
        if (!map.country.empty()) {
            cells.push_back(r.region == kUnknownRegion ? std::string() : r.region);
        }
        if (!map.stage_hint.empty()) cells.emplace_back(stage_name(r.stage));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out << (i ? "," : "") << csv::escape(cells[i]);
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

FieldPair import_field_csv(const std::vector<std::filesystem::path>& predictions,
                           const std::filesystem::path& reference) {
    if (predictions.empty()) {
        throw IoError("at least one prediction file is required");
    }
    const auto ref = csv::read_matrix(reference);
    if (ref.empty()) {
        throw IoError(reference.string() + " contains no data");
    }
    std::vector<std::vector<double>> runs;
    for (const auto& p : predictions) {
        const auto pred = csv::read_matrix(p);
        if (pred.size() != ref.size() || pred.front().size() != ref.front().size()) {
            throw IoError("shape mismatch: prediction " + p.string() + " is " + shape(pred) +
                          ", reference " + reference.string() + " is " + shape(ref));
        }
        auto& flat = runs.emplace_back();
        for (const auto& row : pred) {
            flat.insert(flat.end(), row.begin(), row.end());
        }
    }

    FieldPair pair;
    pair.rows = ref.size();
    pair.cols = ref.front().size();
    for (const auto& row : ref) {
        pair.reference.insert(pair.reference.end(), row.begin(), row.end());
    }
    pair.prediction = mean_prediction(runs);
    return pair;
}

}  // namespace ecol2
