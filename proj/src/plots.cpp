#include "likspec/plots.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "likspec/error.hpp"
#include "likspec/io.hpp"
#include "likspec/rng.hpp"

namespace likspec::plots {

namespace {

void check_same_grid(const std::vector<Spectrum>& group) {
  if (group.empty()) throw Error(ErrorCode::kInvalidArgument, "empty group");
  for (const auto& s : group) {
    if (s.bins() != group.front().bins()) {
      throw Error(ErrorCode::kGridMismatch, "spectra in a group differ in bin count");
    }
  }
}

double percentile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

Spectrum group_mean(const std::vector<Spectrum>& group, const std::string& name) {
  check_same_grid(group);
  Spectrum out;
  out.doc_id = name;
  out.freqs = group.front().freqs;
  out.n_input = group.front().n_input;
  out.power.assign(group.front().bins(), 0.0);
  for (const auto& s : group) {
    for (std::size_t k = 0; k < s.bins(); ++k) out.power[k] += s.power[k];
  }
  for (auto& v : out.power) v /= static_cast<double>(group.size());
  return out;
}

std::map<std::string, Spectrum> group_means(const std::vector<Spectrum>& spectra,
                                            const std::vector<std::string>& labels) {
  if (spectra.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one label per spectrum required");
  }
  std::map<std::string, std::vector<Spectrum>> groups;
  for (std::size_t i = 0; i < spectra.size(); ++i) groups[labels[i]].push_back(spectra[i]);
  std::map<std::string, Spectrum> out;
  for (const auto& [label, g] : groups) out.emplace(label, group_mean(g, label));
  return out;
}

Band bootstrap_ci(const std::vector<Spectrum>& group, std::size_t resamples, double level,
                  std::uint64_t seed) {
  check_same_grid(group);
  if (group.size() < 2) throw Error(ErrorCode::kInvalidArgument, "bootstrap needs >= 2 spectra");
  if (resamples < 1) throw Error(ErrorCode::kInvalidArgument, "resamples must be >= 1");
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "level must be in (0, 1)");
  }
  const std::size_t n = group.size(), bins = group.front().bins();
  std::vector<std::vector<double>> means(bins, std::vector<double>(resamples));
  std::vector<double> acc(bins);
  Rng rng(seed);
  for (std::size_t r = 0; r < resamples; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = group[rng.index(n)];
      for (std::size_t k = 0; k < bins; ++k) acc[k] += s.power[k];
    }
    for (std::size_t k = 0; k < bins; ++k) means[k][r] = acc[k] / static_cast<double>(n);
  }
  Band b;
  const double q_lo = (1.0 - level) / 2.0, q_hi = (1.0 + level) / 2.0;
  for (auto& m : means) {
    std::sort(m.begin(), m.end());
    b.lo.push_back(percentile_sorted(m, q_lo));
    b.hi.push_back(percentile_sorted(m, q_hi));
  }
  return b;
}

std::vector<double> smooth(const std::vector<double>& x, const std::vector<double>& y,
                           double span) {
  if (x.size() != y.size()) throw Error(ErrorCode::kLengthMismatch, "smooth: x/y sizes differ");
  if (x.size() < 3) throw Error(ErrorCode::kTooShort, "smooth: needs >= 3 points");
  if (!(span > 0.0 && span <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "smooth: span must be in (0, 1]");
  }
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double h = span * (*mx - *mn);
  std::vector<double> out(x.size());
  for (std::size_t p = 0; p < x.size(); ++p) {
    double sw = 0, sx = 0, sy = 0;
    std::vector<double> w(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = std::abs(x[i] - x[p]);
      if (h > 0.0 && d < h) {
        const double u = d / h;
        const double t = 1.0 - u * u * u;
        w[i] = t * t * t;
      } else if (d == 0.0) {
        w[i] = 1.0;
      }
      sw += w[i];
      sx += w[i] * x[i];
      sy += w[i] * y[i];
    }
    const double xm = sx / sw, ym = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += w[i] * (x[i] - xm) * (x[i] - xm);
      sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    }
    // degenerate neighbourhood (single x value): local constant fit
    const double range = *mx - *mn;
    out[p] = sxx > 1e-14 * range * range * sw ? ym + (sxy / sxx) * (x[p] - xm) : ym;
  }
  return out;
}

std::vector<Curve> build_curves(const std::map<std::string, std::vector<Spectrum>>& groups,
                                const CurveOptions& opts) {
  std::vector<Curve> out;
  for (const auto& [name, members] : groups) {
    const auto mean = group_mean(members, name);
    Curve c;
    c.group = name;
    c.freqs = mean.freqs;
    c.mean = mean.power;
    if (members.size() >= 2) {
      const auto band = bootstrap_ci(members, opts.resamples, opts.level, mix_seed(opts.seed, name));
      c.lo = band.lo;
      c.hi = band.hi;
    } else {
      c.lo = c.mean;
      c.hi = c.mean;
    }
    if (opts.span) c.smoothed = smooth(c.freqs, c.mean, *opts.span);
    out.push_back(std::move(c));
  }
  return out;
}

std::string curves_to_csv(const std::vector<Curve>& curves) {
  const bool with_smooth =
      std::any_of(curves.begin(), curves.end(), [](const Curve& c) { return c.smoothed.has_value(); });
  std::string out = with_smooth ? "group,freq,mean,lo,hi,smoothed\n" : "group,freq,mean,lo,hi\n";
  for (const auto& c : curves) {
    io::check_csv_field(c.group);
    for (std::size_t k = 0; k < c.freqs.size(); ++k) {
      out += c.group + "," + io::format_double(c.freqs[k]) + "," + io::format_double(c.mean[k]) +
             "," + io::format_double(c.lo[k]) + "," + io::format_double(c.hi[k]);
      if (with_smooth) {
        out += ",";
        if (c.smoothed) out += io::format_double((*c.smoothed)[k]);
      }
      out += "\n";
    }
  }
  return out;
}

std::vector<Curve> parse_curves_csv(std::string_view text) {
  const auto lines = io::split_lines(text);
  if (lines.empty()) throw ParseError(1, "empty curve file");
  const bool with_smooth = lines[0] == "group,freq,mean,lo,hi,smoothed";
  if (!with_smooth && lines[0] != "group,freq,mean,lo,hi") {
    throw ParseError(1, "unexpected curve header");
  }
  std::vector<Curve> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = io::split_csv(lines[i]);
    if (f.size() != (with_smooth ? 6u : 5u)) throw ParseError(i + 1, "wrong field count");
    if (out.empty() || out.back().group != f[0]) {
      out.push_back({});
      out.back().group = f[0];
    }
    auto& c = out.back();
    c.freqs.push_back(io::parse_double(f[1]));
    c.mean.push_back(io::parse_double(f[2]));
    c.lo.push_back(io::parse_double(f[3]));
    c.hi.push_back(io::parse_double(f[4]));
    if (with_smooth && !f[5].empty()) {
      if (!c.smoothed) c.smoothed.emplace();
      c.smoothed->push_back(io::parse_double(f[5]));
    }
  }
  return out;
}

std::string curves_to_svg(const std::vector<Curve>& curves, const std::string& title) {
  constexpr double kW = 720, kH = 440, kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                     "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  double xmin = 0.0, xmax = 0.5, ymin = 0.0, ymax = 0.0;
  bool any = false;
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.freqs.size(); ++k) {
      if (!any) {
        xmin = xmax = c.freqs[k];
        ymin = c.lo[k];
        ymax = c.hi[k];
        any = true;
      }
      xmin = std::min(xmin, c.freqs[k]);
      xmax = std::max(xmax, c.freqs[k]);
      ymin = std::min({ymin, c.lo[k], c.mean[k]});
      ymax = std::max({ymax, c.hi[k], c.mean[k]});
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return kTop + ph - (v - ymin) / (ymax - ymin) * ph; };
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
  }
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
      << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + ph << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0, yv = ymin + (ymax - ymin) * t / 4.0;
    svg << "<text x=\"" << num(px(xv)) << "\" y=\"" << kTop + ph + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(yv) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15
      << "\" font-size=\"13\" text-anchor=\"middle\">normalized frequency (k/N)</text>\n";
  svg << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" font-size=\"13\" text-anchor=\"middle\""
      << " transform=\"rotate(-90 18 " << kTop + ph / 2 << ")\">spectrum magnitude</text>\n";

  for (std::size_t g = 0; g < curves.size(); ++g) {
    const auto& c = curves[g];
    const char* color = kColors[g % std::size(kColors)];
    svg << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t k = 0; k < c.freqs.size(); ++k) {
      svg << num(px(c.freqs[k])) << "," << num(py(c.hi[k])) << " ";
    }
    for (std::size_t k = c.freqs.size(); k-- > 0;) {
      svg << num(px(c.freqs[k])) << "," << num(py(c.lo[k])) << " ";
    }
    svg << "\"/>\n";
    const auto& line = c.smoothed ? *c.smoothed : c.mean;
    svg << "<polyline class=\"curve\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t k = 0; k < c.freqs.size(); ++k) {
      svg << num(px(c.freqs[k])) << "," << num(py(line[k])) << " ";
    }
    svg << "\"/>\n";
    const double ly = kTop + 16 + 20.0 * static_cast<double>(g);
    svg << "<line x1=\"" << kW - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 36
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kW - kRight + 42 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
        << xml_escape(c.group) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit(const std::vector<Curve>& curves, const std::filesystem::path& path,
          const std::string& title) {
  const auto ext = path.extension().string();
  if (ext == ".csv") {
    io::write_file(path, curves_to_csv(curves));
  } else if (ext == ".svg") {
    io::write_file(path, curves_to_svg(curves, title));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "output must end in .csv or .svg");
  }
}

}  // namespace likspec::plots
