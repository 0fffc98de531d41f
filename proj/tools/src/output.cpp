#include "nslab/cli/output.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include <unistd.h>

namespace nslab::cli {

using nlohmann::json;

namespace {

struct Columns {
    std::vector<std::string> names;  // state columns, t/mode/event excluded
    bool sliding = false;
    bool u_from_state = false;
};

Columns columns_of(const Trajectory& traj) {
    const StateLayout& L = traj.layout();
    Columns c;
    for (std::size_t i = 1; i <= L.x_dim; ++i) c.names.push_back("x" + std::to_string(i));
    c.names.push_back("y");
    c.sliding = !L.has_y;
    c.u_from_state = L.has_u;
    if (!c.sliding) c.names.push_back("u");
    return c;
}

std::vector<double> row_values(const Trajectory& traj, const Columns& c, std::size_t i) {
    const StateLayout& L = traj.layout();
    const Vec& s = traj.states()[i];
    std::vector<double> v(s.begin(), s.begin() + static_cast<long>(L.x_dim));
    v.push_back(c.sliding ? 0.0 : s[L.y_index()]);
    if (!c.sliding) v.push_back(c.u_from_state ? s[L.u_index()] : traj.controls()[i]);
    return v;
}

// Event labels attached to the nearest node.
std::vector<std::string> event_labels(const Trajectory& traj) {
    std::vector<std::string> labels(traj.size());
    const auto& ts = traj.times();
    for (const auto& ev : traj.events()) {
        auto it = std::lower_bound(ts.begin(), ts.end(), ev.time);
        std::size_t i = static_cast<std::size_t>(it - ts.begin());
        if (i == ts.size() || (i > 0 && ev.time - ts[i - 1] < ts[i] - ev.time)) --i;
        std::string name(to_string(ev.kind));
        if (ev.kind == EventKind::SectionCrossing) name += std::to_string(ev.tag);
        labels[i] += (labels[i].empty() ? "" : ";") + name;
    }
    return labels;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_field(fields[i]);
    }
    return out + "\r\n";
}

std::string trajectory_csv(const Trajectory& traj) {
    const Columns c = columns_of(traj);
    std::vector<std::string> header{"t"};
    header.insert(header.end(), c.names.begin(), c.names.end());
    header.push_back("mode");
    header.push_back("event");
    std::string out = csv_row(header);
    const auto labels = event_labels(traj);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        std::vector<std::string> row{format_double(traj.times()[i])};
        for (double v : row_values(traj, c, i)) row.push_back(format_double(v));
        row.push_back(std::to_string(traj.modes()[i]));
        row.push_back(labels[i]);
        out += csv_row(row);
    }
    return out;
}

json trajectory_json(const Trajectory& traj, const json& params) {
    const Columns c = columns_of(traj);
    json states = json::array();
    for (std::size_t i = 0; i < traj.size(); ++i) states.push_back(row_values(traj, c, i));
    json events = json::array();
    for (const auto& ev : traj.events()) {
        events.push_back({{"t", ev.time}, {"kind", std::string(to_string(ev.kind))}, {"tag", ev.tag}});
    }
    return json{{"columns", c.names}, {"times", traj.times()}, {"states", states},
                {"modes", traj.modes()},  {"events", events},      {"params", params}};
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        std::error_code ignore;
        fs::remove(tmp, ignore);
        throw std::runtime_error("cannot rename onto '" + path + "': " + ec.message());
    }
}

}  // namespace nslab::cli
