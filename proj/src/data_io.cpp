#include "fuzconv/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "fuzconv/errors.hpp"
#include "fuzconv/util.hpp"

namespace fuzconv {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])) != 0) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])) != 0) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
    const std::string t = trim(s);
    if (t.empty()) {
        raise(ErrorCode::ParseError,
              path + ":" + std::to_string(line_no) + ": empty value field");
    }
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') {
        raise(ErrorCode::ParseError,
              path + ":" + std::to_string(line_no) + ": cannot parse number '" + t + "'");
    }
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorCode::IoError, "cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

} // namespace

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorCode::IoError, "cannot open manifest '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        raise(ErrorCode::ParseError, "manifest '" + path + "': " + e.what());
    }

    DatasetManifest m;
    m.name = j.value("name", std::filesystem::path(path).stem().string());
    if (!j.contains("path")) {
        raise(ErrorCode::ParseError, "manifest '" + path + "' lacks a 'path' field");
    }
    m.path = j["path"].get<std::string>();
    m.format = j.value("format", std::string("csv"));
    m.horizon = j.value("horizon", 0);
    m.frequency = j.value("frequency", std::string());
    if (j.contains("period")) m.period = j["period"].get<int>();
    if (j.contains("series")) {
        for (const auto& s : j["series"]) m.series_filter.push_back(s.get<std::string>());
    }
    if (m.format != "csv" && m.format != "tsf") {
        raise(ErrorCode::ParseError, "manifest format must be csv or tsf, got '" + m.format + "'");
    }
    // relative data paths resolve against the manifest's directory
    std::filesystem::path data_path(m.path);
    if (data_path.is_relative()) {
        m.path = (std::filesystem::path(path).parent_path() / data_path).string();
    }
    return m;
}

std::optional<int> period_for_frequency(const std::string& frequency) {
    if (frequency == "daily") return 7;
    if (frequency == "hourly") return 24;
    if (frequency == "half_hourly") return 48;
    if (frequency == "monthly") return 12;
    if (frequency == "quarterly") return 4;
    if (frequency == "weekly") return 52;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

std::vector<RawSeries> load_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) raise(ErrorCode::ParseError, path + ": empty file");

    std::vector<std::string> order;                 // first-seen series order
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> data;

    const std::string header = trim(lines[0]);
    const bool three_col = header == "series,timestamp,value";
    std::size_t start = 0;
    if (three_col || header == "value") start = 1;

    for (std::size_t i = start; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty()) continue;
        const std::size_t line_no = i + 1;
        if (three_col) {
            const auto fields = split_on(line, ',');
            if (fields.size() != 3) {
                raise(ErrorCode::ParseError,
                      path + ":" + std::to_string(line_no) + ": expected 3 fields, got " +
                          std::to_string(fields.size()));
            }
            const std::string name = trim(fields[0]);
            if (name.empty()) {
                raise(ErrorCode::ParseError,
                      path + ":" + std::to_string(line_no) + ": empty series name");
            }
            const double ts = parse_double(fields[1], path, line_no);
            const double v = parse_double(fields[2], path, line_no);
            if (data.find(name) == data.end()) order.push_back(name);
            data[name].first.push_back(ts);
            data[name].second.push_back(v);
        } else {
            const double v = parse_double(line, path, line_no);
            const std::string name = std::filesystem::path(path).stem().string();
            if (data.find(name) == data.end()) order.push_back(name);
            data[name].first.push_back(static_cast<double>(data[name].second.size() + 1));
            data[name].second.push_back(v);
        }
    }

    std::vector<RawSeries> out;
    for (const auto& name : order) {
        auto& [ts, vs] = data[name];
        out.emplace_back(name, std::move(ts), std::move(vs)); // validates monotonicity
    }
    return out;
}

void write_csv(const std::vector<RawSeries>& series, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    f << "series,timestamp,value\n";
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            f << s.name << ',' << format_double(s.timestamps[i]) << ','
              << format_double(s.values[i]) << '\n';
        }
    }
    if (!f) raise(ErrorCode::IoError, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// TSF
// ---------------------------------------------------------------------------

TsfDataset load_tsf(const std::string& path) {
    const auto lines = read_lines(path);
    TsfDataset out;
    std::vector<std::string> attributes;
    bool in_data = false;
    bool saw_data_marker = false;

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        const std::size_t line_no = i + 1;
        if (line.empty() || line[0] == '#') continue;

        if (!in_data) {
            if (line.rfind("@attribute", 0) == 0) {
                std::istringstream ss(line);
                std::string tag, name, type;
                ss >> tag >> name >> type;
                if (name.empty()) {
                    raise(ErrorCode::ParseError,
                          path + ":" + std::to_string(line_no) + ": malformed @attribute");
                }
                attributes.push_back(name);
            } else if (line.rfind("@horizon", 0) == 0) {
                out.horizon = static_cast<int>(parse_double(line.substr(8), path, line_no));
            } else if (line.rfind("@frequency", 0) == 0) {
                out.frequency = trim(line.substr(10));
            } else if (line == "@data") {
                in_data = true;
                saw_data_marker = true;
            } else if (line[0] == '@') {
                // other headers (@relation, @missing, @equallength) are accepted and ignored
            } else {
                raise(ErrorCode::ParseError,
                      path + ":" + std::to_string(line_no) + ": data row before @data marker");
            }
            continue;
        }

        const auto fields = split_on(line, ':');
        if (fields.size() != attributes.size() + 1) {
            raise(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(attributes.size() + 1) + " colon-separated fields, got " +
                      std::to_string(fields.size()));
        }
        const std::string name =
            attributes.empty() ? "series" + std::to_string(out.series.size() + 1)
                               : trim(fields[0]);
        const auto value_fields = split_on(fields.back(), ',');
        std::vector<double> values;
        values.reserve(value_fields.size());
        for (const auto& vf : value_fields) {
            const std::string t = trim(vf);
            if (t == "?") {
                raise(ErrorCode::ParseError, path + ":" + std::to_string(line_no) +
                                                 ": missing value ('?') in series '" + name +
                                                 "'; imputation is not supported");
            }
            values.push_back(parse_double(t, path, line_no));
        }
        out.series.push_back(RawSeries::make_with_unit_ticks(name, std::move(values)));
    }

    if (!saw_data_marker) {
        raise(ErrorCode::ParseError, path + ": no @data marker");
    }
    return out;
}

void write_tsf(const TsfDataset& dataset, const std::string& relation_name,
               const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    f << "@relation " << relation_name << "\n";
    f << "@attribute series_name string\n";
    if (!dataset.frequency.empty()) f << "@frequency " << dataset.frequency << "\n";
    if (dataset.horizon.has_value()) f << "@horizon " << *dataset.horizon << "\n";
    f << "@data\n";
    for (const auto& s : dataset.series) {
        f << s.name << ':';
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (i > 0) f << ',';
            f << format_double(s.values[i]);
        }
        f << '\n';
    }
    if (!f) raise(ErrorCode::IoError, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Forecast output
// ---------------------------------------------------------------------------

void write_forecast(const ForecastReport& report, const std::string& path) {
    {
        std::ofstream f(path, std::ios::trunc);
        if (!f) raise(ErrorCode::IoError, "cannot open '" + path + "' for writing");
        f << "series,step,predicted,actual\n";
        for (const auto& s : report.series) {
            for (std::size_t i = 0; i < s.predictions.size(); ++i) {
                f << s.name << ',' << (i + 1) << ',' << format_double(s.predictions[i]) << ',';
                if (i < s.actuals.size()) f << format_double(s.actuals[i]);
                f << '\n';
            }
        }
        if (!f) raise(ErrorCode::IoError, "write failed for '" + path + "'");
    }

    nlohmann::json j;
    j["dataset"] = report.dataset;
    j["model_fingerprint"] = report.model_fingerprint;
    j["aggregate"] = {{"mae", report.aggregate_mae()}, {"rmse", report.aggregate_rmse()}};
    j["clamp_count"] = report.total_clamps();
    j["series"] = nlohmann::json::array();
    for (const auto& s : report.series) {
        nlohmann::json js;
        js["name"] = s.name;
        js["horizon"] = s.predictions.size();
        js["mae"] = s.mae_value;
        js["rmse"] = s.rmse_value;
        js["clamp_count"] = s.clamp_count;
        js["baseline"] = {{"persistence_mae", s.persistence_mae},
                          {"persistence_rmse", s.persistence_rmse}};
        if (s.seasonal_mae.has_value()) {
            js["baseline"]["seasonal_naive_mae"] = *s.seasonal_mae;
            js["baseline"]["seasonal_naive_rmse"] = *s.seasonal_rmse;
        }
        j["series"].push_back(std::move(js));
    }
    std::ofstream jf(path + ".json", std::ios::trunc);
    if (!jf) raise(ErrorCode::IoError, "cannot open '" + path + ".json' for writing");
    jf << j.dump(2) << '\n';
}

RecomputedMetrics recompute_from_forecast_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || trim(lines[0]) != "series,step,predicted,actual") {
        raise(ErrorCode::ParseError, path + ": not a forecast CSV");
    }
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty()) continue;
        const auto fields = split_on(line, ',');
        if (fields.size() != 4) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(i + 1) + ": expected 4 fields");
        }
        if (trim(fields[3]).empty()) continue; // no actual recorded for this step
        const std::string name = trim(fields[0]);
        if (rows.find(name) == rows.end()) order.push_back(name);
        rows[name].first.push_back(parse_double(fields[2], path, i + 1));
        rows[name].second.push_back(parse_double(fields[3], path, i + 1));
    }
    RecomputedMetrics out;
    for (const auto& name : order) {
        const auto& [pred, actual] = rows[name];
        out.series.push_back(name);
        out.mae_values.push_back(mae(pred, actual));
        out.rmse_values.push_back(rmse(pred, actual));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Window dumps
// ---------------------------------------------------------------------------

void write_window_dump(const FuzzifiedDataset& data, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    f << "window_id,row,col,value\n";
    for (std::size_t w = 0; w < data.tensors.size(); ++w) {
        const auto& t = data.tensors[w];
        for (std::size_t r = 0; r < t.rows; ++r) {
            for (std::size_t c = 0; c < t.cols; ++c) {
                f << w << ',' << r << ',' << c << ',' << format_double(t.at(r, c)) << '\n';
            }
        }
    }
    if (!f) raise(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::vector<FuzzyWindowTensor> load_window_dump(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || trim(lines[0]) != "window_id,row,col,value") {
        raise(ErrorCode::ParseError, path + ": not a window dump CSV");
    }
    struct Cell {
        std::size_t w, r, c;
        double v;
    };
    std::vector<Cell> cells;
    std::size_t max_w = 0, max_r = 0, max_c = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty()) continue;
        const auto fields = split_on(line, ',');
        if (fields.size() != 4) {
            raise(ErrorCode::ParseError, path + ":" + std::to_string(i + 1) + ": expected 4 fields");
        }
        Cell cell;
        cell.w = static_cast<std::size_t>(parse_double(fields[0], path, i + 1));
        cell.r = static_cast<std::size_t>(parse_double(fields[1], path, i + 1));
        cell.c = static_cast<std::size_t>(parse_double(fields[2], path, i + 1));
        cell.v = parse_double(fields[3], path, i + 1);
        max_w = std::max(max_w, cell.w);
        max_r = std::max(max_r, cell.r);
        max_c = std::max(max_c, cell.c);
        cells.push_back(cell);
    }
    std::vector<FuzzyWindowTensor> out(max_w + 1);
    for (auto& t : out) {
        t.rows = max_r + 1;
        t.cols = max_c + 1;
        t.center_col = (t.cols - 1) / 2;
        t.data.assign(t.rows * t.cols, 0.0);
    }
    for (const auto& cell : cells) {
        out[cell.w].data[cell.r * out[cell.w].cols + cell.c] = cell.v;
    }
    return out;
}

MetricTable load_metric_table(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) raise(ErrorCode::ParseError, path + ": empty file");
    auto header = split_on(trim(lines[0]), ',');
    if (header.size() < 3 || trim(header[0]) != "dataset") {
        raise(ErrorCode::ParseError, path + ": header must be dataset,<model>,<model>,...");
    }
    MetricTable table;
    for (std::size_t i = 1; i < header.size(); ++i) table.models.push_back(trim(header[i]));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string line = trim(lines[i]);
        if (line.empty()) continue;
        const auto fields = split_on(line, ',');
        if (fields.size() != header.size()) {
            raise(ErrorCode::ParseError,
                  path + ":" + std::to_string(i + 1) + ": row width differs from header");
        }
        table.datasets.push_back(trim(fields[0]));
        std::vector<double> row;
        for (std::size_t c = 1; c < fields.size(); ++c) {
            row.push_back(parse_double(fields[c], path, i + 1));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace fuzconv
