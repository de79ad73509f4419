#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ambientflow/flow.hpp"
#include "ambientflow/geometry.hpp"

namespace ambientflow {

/// %.17g; "nan", "inf", "-inf" for non-finite values.
std::string format_real(double x);

/// Writes to a sibling temporary and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// `x,y` header plus one vertex per line.
std::string curve_to_csv(const ClosedCurve& curve);
/// CSV (`x,y`) or JSON ({"vertices": [[x,y], ...]}), chosen by extension.
ClosedCurve read_curve(const std::filesystem::path& path);

/// Columns t,L,A,W,kmin,kmax,Fmin.
std::string series_to_csv(const FlowSeries& s);
/// Columns t,int_k2,int_kVn,int_Vn,max_radius.
std::string integrals_to_csv(const FlowSeries& s);
/// Reads both files back into one series.
FlowSeries read_series(const std::filesystem::path& series_csv, const std::filesystem::path& integrals_csv);

/// Simple numeric table: header line plus rows, all columns real.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::string str() const;
};
CsvTable parse_csv(const std::string& text);

struct SvgStyle {
    double size = 600.0;      ///< width and height in px
    double margin = 0.05;     ///< fraction of the span added on each side
    double stroke = 1.0;
    std::string color = "#1f4e79";
    double min_opacity = 0.15;  ///< first path of a sequence; the last is opaque
    bool center_origin = false; ///< symmetric viewport about the origin
};

/// One closed path per curve in a fixed viewport covering all curves; later
/// curves are drawn more opaque.
std::string render_svg(const std::vector<ClosedCurve>& curves, const SvgStyle& style = {});

}  // namespace ambientflow
