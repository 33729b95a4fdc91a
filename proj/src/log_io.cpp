#include "ofmpc/log_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace ofmpc {

namespace {

struct VectorColumn {
    const char* name;
    Vector StepRecord::*field;
};

constexpr VectorColumn kVectorColumns[] = {
    {"r", &StepRecord::r},
    {"z_p", &StepRecord::z_p},
    {"y_p", &StepRecord::y_p},
    {"u", &StepRecord::u},
    {"x_hat", &StepRecord::x_hat},
    {"d_learned", &StepRecord::d_learned},
    {"d_supp", &StepRecord::d_supp},
    {"d_total", &StepRecord::d_total},
    {"x_bar", &StepRecord::x_bar},
    {"u_bar", &StepRecord::u_bar},
};

std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void append_vector(std::string& line, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        line += ',';
        line += format(v(i));
    }
}

void append_header(std::string& line, const std::string& name, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
        line += ',' + name + '_' + std::to_string(i);
    }
}

Error parse_error(std::size_t line, const std::string& what) {
    return Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_double(const std::string& cell, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw parse_error(line, "'" + cell + "' is not a number");
    }
    return v;
}

nlohmann::json to_json(const Vector& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(v(i));
    }
    return arr;
}

} // namespace

void write_log_csv(std::ostream& out, const std::vector<StepRecord>& records,
                   const AbsoluteOffsets* offsets) {
    if (records.empty()) {
        out << "time,objective,active_count,steady,harvested\n";
        return;
    }
    const StepRecord& first = records.front();
    std::string header = "time";
    for (const auto& col : kVectorColumns) {
        append_header(header, col.name, (first.*col.field).size());
    }
    header += ",objective,active_count,steady,harvested";
    if (offsets != nullptr) {
        append_header(header, "r_abs", first.r.size());
        append_header(header, "y_abs", first.y_p.size());
        append_header(header, "u_abs", first.u.size());
    }
    out << header << '\n';

    for (const StepRecord& rec : records) {
        std::string line = std::to_string(rec.time);
        for (const auto& col : kVectorColumns) {
            const Vector& v = rec.*col.field;
            if (v.size() != (first.*col.field).size()) {
                throw Error(ErrorCode::DimensionMismatch,
                            std::string("column group '") + col.name + "' changes width");
            }
            append_vector(line, v);
        }
        line += ',' + format(rec.objective) + ',' + std::to_string(rec.active_count) + ',' +
                (rec.steady ? "1" : "0") + ',' + (rec.harvested ? "1" : "0");
        if (offsets != nullptr) {
            append_vector(line, rec.r + offsets->z);
            append_vector(line, rec.y_p + offsets->y);
            append_vector(line, rec.u + offsets->u);
        }
        out << line << '\n';
    }
}

std::vector<StepRecord> read_log_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw parse_error(1, "missing header");
    }
    const std::vector<std::string> header = split(line);
    if (header.empty() || header[0] != "time") {
        throw parse_error(1, "header must start with 'time'");
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        index[header[i]] = i;
    }
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = index.find(name);
        return it == index.end() ? std::nullopt : std::optional<std::size_t>(it->second);
    };
    // Width of each vector group from the header.
    std::vector<std::vector<std::size_t>> groups;
    for (const auto& col : kVectorColumns) {
        std::vector<std::size_t> cols;
        for (std::size_t i = 0;; ++i) {
            const auto c = column(std::string(col.name) + "_" + std::to_string(i));
            if (!c) {
                break;
            }
            cols.push_back(*c);
        }
        groups.push_back(std::move(cols));
    }
    const auto objective = column("objective");
    const auto active = column("active_count");
    const auto steady = column("steady");
    const auto harvested = column("harvested");
    if (!objective || !active || !steady || !harvested) {
        throw parse_error(1, "missing scalar columns");
    }

    std::vector<StepRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> cells = split(line);
        if (cells.size() != header.size()) {
            throw parse_error(line_no, "expected " + std::to_string(header.size()) + " cells, found " +
                                           std::to_string(cells.size()));
        }
        StepRecord rec;
        rec.time = static_cast<std::size_t>(parse_double(cells[0], line_no));
        for (std::size_t g = 0; g < groups.size(); ++g) {
            Vector v(static_cast<Eigen::Index>(groups[g].size()));
            for (std::size_t i = 0; i < groups[g].size(); ++i) {
                v(static_cast<Eigen::Index>(i)) = parse_double(cells[groups[g][i]], line_no);
            }
            rec.*kVectorColumns[g].field = std::move(v);
        }
        rec.objective = parse_double(cells[*objective], line_no);
        rec.active_count = static_cast<std::size_t>(parse_double(cells[*active], line_no));
        rec.steady = parse_double(cells[*steady], line_no) != 0.0;
        rec.harvested = parse_double(cells[*harvested], line_no) != 0.0;
        records.push_back(std::move(rec));
    }
    return records;
}

void write_samples_csv(std::ostream& out, const std::vector<HarvestedSample>& samples) {
    if (samples.empty()) {
        out << "time,cross_check\n";
        return;
    }
    const HarvestedSample& first = samples.front();
    std::string header = "time";
    append_header(header, "r", first.r.size());
    append_header(header, "d_ss", first.d_ss.size());
    append_header(header, "y_p", first.y_p.size());
    append_header(header, "u", first.u.size());
    out << header << ",cross_check\n";
    for (const HarvestedSample& s : samples) {
        std::string line = std::to_string(s.time);
        append_vector(line, s.r);
        append_vector(line, s.d_ss);
        append_vector(line, s.y_p);
        append_vector(line, s.u);
        out << line << ',' << format(s.cross_check) << '\n';
    }
}

void write_summary_json(std::ostream& out, const ClosedLoopLog& log, const MetricsSummary& summary) {
    nlohmann::json j;
    j["mode"] = std::string(to_string(log.mode));
    j["intervals"] = log.records.size();
    j["total_ise"] = summary.total_ise;
    j["max_terminal_offset"] = summary.max_terminal_offset;
    nlohmann::json segments = nlohmann::json::array();
    for (const SegmentSummary& s : summary.segments) {
        nlohmann::json seg;
        seg["start"] = s.start;
        seg["end"] = s.end;
        seg["r"] = to_json(s.r);
        seg["terminal_offset"] = to_json(s.terminal_offset);
        seg["ise"] = s.ise;
        seg["peak"] = s.peak;
        seg["settling_time"] = s.settling_time ? nlohmann::json(*s.settling_time) : nlohmann::json();
        segments.push_back(seg);
    }
    j["segments"] = segments;
    j["harvested_samples"] = log.samples.size();
    j["rejected_samples"] = log.rejected_samples;
    j["event_times"] = log.event_times;
    j["abort_reason"] = log.abort_reason ? nlohmann::json(*log.abort_reason) : nlohmann::json();
    out << j.dump(2) << '\n';
}

} // namespace ofmpc
