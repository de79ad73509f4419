#include "ambientflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ambientflow/error.hpp"

namespace ambientflow {

namespace fs = std::filesystem;

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::MissingInput, "cannot write " + tmp.string());
        out << text;
        if (!out.flush()) throw Error(ErrorKind::MissingInput, "write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::MissingInput, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- CSV ----------------------------------------------------------------------

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_real(row[i]);
        }
        out += '\n';
    }
    return out;
}

namespace {

double parse_real(const std::string& cell) {
    if (cell == "nan") return std::nan("");
    if (cell == "inf") return INFINITY;
    if (cell == "-inf") return -INFINITY;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "bad number '" + cell + "' in CSV");
    }
    if (used != cell.size()) throw Error(ErrorKind::Config, "bad number '" + cell + "' in CSV");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cell.erase(0, cell.find_first_not_of(" \t"));
        cell.erase(cell.find_last_not_of(" \t\r") + 1);
        cells.push_back(cell);
    }
    return cells;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (first) {
            t.header = cells;
            first = false;
            continue;
        }
        if (cells.size() != t.header.size()) throw Error(ErrorKind::Config, "ragged CSV row: " + line);
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_real(c));
        t.rows.push_back(std::move(row));
    }
    if (first) throw Error(ErrorKind::Config, "empty CSV");
    return t;
}

std::string curve_to_csv(const ClosedCurve& curve) {
    CsvTable t{{"x", "y"}, {}};
    for (const auto& p : curve.vertices()) t.rows.push_back({p.x, p.y});
    return t.str();
}

ClosedCurve read_curve(const fs::path& path) {
    const std::string text = read_text(path);
    std::vector<Point2> v;
    if (path.extension() == ".json") {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::Config, path.string() + ": " + e.what());
        }
        if (!j.contains("vertices") || !j["vertices"].is_array())
            throw Error(ErrorKind::Config, path.string() + ": needs a \"vertices\" array");
        for (const auto& p : j["vertices"]) {
            if (!p.is_array() || p.size() != 2) throw Error(ErrorKind::Config, "vertex must be [x, y]");
            v.push_back({p[0].get<double>(), p[1].get<double>()});
        }
    } else {
        const auto t = parse_csv(text);
        if (t.header.size() != 2 || t.header[0] != "x" || t.header[1] != "y")
            throw Error(ErrorKind::Config, path.string() + ": expected header x,y");
        for (const auto& r : t.rows) v.push_back({r[0], r[1]});
    }
    return ClosedCurve::from_vertices(std::move(v));
}

std::string series_to_csv(const FlowSeries& s) {
    CsvTable t{{"t", "L", "A", "W", "kmin", "kmax", "Fmin"}, {}};
    for (std::size_t i = 0; i < s.size(); ++i)
        t.rows.push_back({s.t[i], s.L[i], s.A[i], s.W[i], s.kmin[i], s.kmax[i], s.Fmin[i]});
    return t.str();
}

std::string integrals_to_csv(const FlowSeries& s) {
    CsvTable t{{"t", "int_k2", "int_kVn", "int_Vn", "max_radius"}, {}};
    for (std::size_t i = 0; i < s.size(); ++i)
        t.rows.push_back({s.t[i], s.int_k2[i], s.int_kVn[i], s.int_Vn[i], s.max_radius[i]});
    return t.str();
}

FlowSeries read_series(const fs::path& series_csv, const fs::path& integrals_csv) {
    const auto a = parse_csv(read_text(series_csv));
    const auto b = parse_csv(read_text(integrals_csv));
    if (a.header != std::vector<std::string>{"t", "L", "A", "W", "kmin", "kmax", "Fmin"})
        throw Error(ErrorKind::Config, series_csv.string() + ": unexpected columns");
    if (b.header != std::vector<std::string>{"t", "int_k2", "int_kVn", "int_Vn", "max_radius"})
        throw Error(ErrorKind::Config, integrals_csv.string() + ": unexpected columns");
    if (a.rows.size() != b.rows.size()) throw Error(ErrorKind::Config, "series and integrals differ in length");
    FlowSeries s;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& r = a.rows[i];
        const auto& q = b.rows[i];
        if (r[0] != q[0]) throw Error(ErrorKind::Config, "series and integrals disagree on t");
        s.t.push_back(r[0]);
        s.L.push_back(r[1]);
        s.A.push_back(r[2]);
        s.W.push_back(r[3]);
        s.kmin.push_back(r[4]);
        s.kmax.push_back(r[5]);
        s.Fmin.push_back(r[6]);
        s.int_k2.push_back(q[1]);
        s.int_kVn.push_back(q[2]);
        s.int_Vn.push_back(q[3]);
        s.max_radius.push_back(q[4]);
    }
    return s;
}

// --- SVG ----------------------------------------------------------------------

namespace {

std::string fixed(double x, int digits = 3) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

}  // namespace

std::string render_svg(const std::vector<ClosedCurve>& curves, const SvgStyle& style) {
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& c : curves)
        for (const auto& p : c.vertices()) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
    if (curves.empty()) xmin = ymin = -1.0, xmax = ymax = 1.0;
    if (style.center_origin) {
        const double r = std::max({std::abs(xmin), std::abs(xmax), std::abs(ymin), std::abs(ymax)});
        xmin = ymin = -r;
        xmax = ymax = r;
    }
    double span = std::max(xmax - xmin, ymax - ymin);
    if (!(span > 0.0)) span = 1.0;
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double half = 0.5 * span * (1.0 + 2.0 * style.margin);
    const double scale = style.size / (2.0 * half);
    auto sx = [&](double x) { return (x - (cx - half)) * scale; };
    auto sy = [&](double y) { return ((cy + half) - y) * scale; };  // y up

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(style.size, 0) + "\" height=\"" +
           fixed(style.size, 0) + "\" viewBox=\"0 0 " + fixed(style.size, 0) + " " + fixed(style.size, 0) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const std::size_t n = curves.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double op = n == 1 ? 1.0
                                 : style.min_opacity + (1.0 - style.min_opacity) * static_cast<double>(k) /
                                                           static_cast<double>(n - 1);
        std::string d;
        const auto v = curves[k].vertices();
        for (std::size_t i = 0; i < v.size(); ++i) {
            d += (i ? " L" : "M") + fixed(sx(v[i].x)) + "," + fixed(sy(v[i].y));
        }
        d += " Z";
        out += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + style.color + "\" stroke-width=\"" +
               fixed(style.stroke, 2) + "\" stroke-opacity=\"" + fixed(op, 3) + "\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace ambientflow
