#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "abp.hpp"
#include "config.hpp"
#include "format.hpp"
#include "harnack.hpp"
#include "normal_bundle.hpp"
#include "paraboloid.hpp"
#include "scene.hpp"

namespace slp {

// ---------------------------------------------------------------------------
// Tables

struct Table {
    std::string name;  ///< file stem
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row)
    {
        if (row.size() != columns.size())
            throw Error("table " + name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                        std::to_string(columns.size()));
        rows.push_back(std::move(row));
    }
    /// Index of a column, or -1.
    int column(std::string_view c) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == c)
                return static_cast<int>(i);
        return -1;
    }
    std::size_t count_verdict(std::string_view v) const
    {
        const int c = column("verdict");
        if (c < 0)
            return 0;
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const auto& r) {
            return r[static_cast<std::size_t>(c)] == v;
        }));
    }
};

inline std::string csv_cell(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"')
            q += '"';
        q += c;
    }
    return q + '"';
}

inline void emit_table(const Table& t, std::ostream& os)
{
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << csv_cell(t.columns[i]);
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << csv_cell(row[i]);
        os << '\n';
    }
}

inline std::string join_reals(const std::vector<double>& v, char sep = ';')
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += sep;
        s += format_real(v[i]);
    }
    return v.empty() ? "-" : s;
}

inline std::string join_vec(const Vec& v, char sep = ';')
{
    return join_reals(std::vector<double>(v.data(), v.data() + v.size()), sep);
}

// ---------------------------------------------------------------------------
// SVG

/// Minimal SVG canvas mapping a data box onto a fixed pixel frame.
class SvgPlot {
public:
    SvgPlot(std::string title, double x0, double x1, double y0, double y1) : title_(std::move(title)), x0_(x0), x1_(x1), y0_(y0), y1_(y1)
    {
        if (!(x1 > x0))
            x1_ = x0 + 1.0;
        if (!(y1 > y0))
            y1_ = y0 + 1.0;
    }

    void dot(double x, double y, double r = 1.5, const char* color = "#1f4e79")
    {
        body_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"" << format_real(r) << "\" fill=\"" << color << "\"/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const char* color = "#b03a2e")
    {
        body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts)
            body_ << px(x) << "," << py(y) << " ";
        body_ << "\"/>\n";
        for (const auto& [x, y] : pts)
            dot(x, y, 2.5, color);
    }
    void bar(double x, double width, double y, const char* color = "#5d6d7e")
    {
        const double top = std::max(y, y0_);
        body_ << "<rect x=\"" << px(x - width / 2) << "\" y=\"" << py(top) << "\" width=\""
              << format_real(xv(x + width / 2) - xv(x - width / 2)) << "\" height=\"" << format_real(yv(y0_) - yv(top))
              << "\" fill=\"" << color << "\"/>\n";
    }
    void circle_outline(double cx, double cy, double r)
    {
        body_ << "<ellipse cx=\"" << px(cx) << "\" cy=\"" << py(cy) << "\" rx=\"" << format_real(xv(cx + r) - xv(cx))
              << "\" ry=\"" << format_real(yv(cy - r) - yv(cy)) << "\" fill=\"none\" stroke=\"#999\"/>\n";
    }
    void label(double x, double y, const std::string& text)
    {
        body_ << "<text x=\"" << px(x) << "\" y=\"" << py(y) << "\" font-size=\"10\">" << escape(text) << "</text>\n";
    }

    std::string str() const
    {
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW
           << " " << kH << "\">\n";
        os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        os << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(title_) << "</text>\n";
        os << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kW - 2 * kPad << "\" height=\"" << kH - 2 * kPad
           << "\" fill=\"none\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << kPad << "\" y=\"" << kH - kPad + 14 << "\" font-size=\"10\">" << format_real(x0_) << "</text>\n";
        os << "<text x=\"" << kW - kPad << "\" y=\"" << kH - kPad + 14 << "\" font-size=\"10\" text-anchor=\"end\">"
           << format_real(x1_) << "</text>\n";
        os << "<text x=\"" << kPad - 4 << "\" y=\"" << kH - kPad << "\" font-size=\"10\" text-anchor=\"end\">" << format_real(y0_)
           << "</text>\n";
        os << "<text x=\"" << kPad - 4 << "\" y=\"" << kPad + 8 << "\" font-size=\"10\" text-anchor=\"end\">" << format_real(y1_)
           << "</text>\n";
        os << body_.str() << "</svg>\n";
        return os.str();
    }

private:
    static constexpr int kW = 480, kH = 480, kPad = 48;
    double xv(double x) const { return kPad + (x - x0_) / (x1_ - x0_) * (kW - 2 * kPad); }
    double yv(double y) const { return kH - kPad - (y - y0_) / (y1_ - y0_) * (kH - 2 * kPad); }
    std::string px(double x) const { return format_real(xv(x)); }
    std::string py(double y) const { return format_real(yv(y)); }
    static std::string escape(const std::string& s)
    {
        std::string o;
        for (char c : s) {
            if (c == '<')
                o += "&lt;";
            else if (c == '>')
                o += "&gt;";
            else if (c == '&')
                o += "&amp;";
            else
                o += c;
        }
        return o;
    }

    std::string title_;
    double x0_, x1_, y0_, y1_;
    std::ostringstream body_;
};

// ---------------------------------------------------------------------------
// Contact curvature bounds

struct CurvatureBounds {
    std::size_t pairs = 0;     ///< contact pairs examined
    std::size_t rim = 0;       ///< pairs skipped for lying within rim_margin of |x'| = 1
    std::size_t valid = 0;     ///< with a usable curvature estimate
    std::size_t sentinel = 0;  ///< records carrying an infinite curvature
    std::size_t lower_ok = 0;  ///< kappa_i >= -a eta_{n+1}
    std::size_t upper_ok = 0;  ///< kappa_i <= (m-1) a eta_{n+1} + h
    double lower_fraction() const { return valid ? static_cast<double>(lower_ok) / static_cast<double>(valid) : 0.0; }
    double upper_fraction() const { return valid ? static_cast<double>(upper_ok) / static_cast<double>(valid) : 0.0; }
};

/// Principal curvatures at up to `max_pairs` contact pairs (evenly strided)
/// against the two bounds a touching paraboloid forces on an (m,h) set. Each
/// bound is tested on the finite curvatures with slack 5 step/r + 10 rho/r.
/// Pairs within rim_margin of |x'| = 1 are skipped: there the offset normal
/// field also sees the end of the sample.
inline CurvatureBounds contact_curvature_bounds(const ClosedSetSample& g, const ContactSet& A, int m, double h,
                                                std::size_t max_pairs, double step, unsigned threads = default_threads(),
                                                double rim_margin = 0.125)
{
    CurvatureBounds out;
    std::vector<std::size_t> inner;
    for (std::size_t i = 0; i < A.pairs.size(); ++i) {
        if (std::sqrt(horizontal_norm2(as_span(A.pairs[i].z))) > 1.0 - rim_margin)
            ++out.rim;
        else
            inner.push_back(i);
    }
    if (inner.empty())
        return out;
    const std::size_t stride = std::max<std::size_t>(1, (inner.size() + max_pairs - 1) / max_pairs);
    std::vector<std::size_t> pick;
    for (std::size_t i = 0; i < inner.size(); i += stride)
        pick.push_back(inner[i]);
    std::vector<CurvatureRecord> recs(pick.size());
    parallel_for(pick.size(), [&](std::size_t k) {
        const auto ns = normal_sample_of(A.pairs[pick[k]]);
        recs[k] = principal_curvatures(g, ns, std::min(step, ns.r / 4));
    }, threads);
    out.pairs = pick.size();
    const int n = g.n();
    for (std::size_t k = 0; k < recs.size(); ++k) {
        const auto& rec = recs[k];
        if (!rec.valid)
            continue;
        ++out.valid;
        out.sentinel += rec.sentinel_count() > 0;
        const auto& p = A.pairs[pick[k]];
        const double ae = p.a * p.eta[n];
        const double tol = 5.0 * rec.step / rec.sample.r + 10.0 * g.rho() / rec.sample.r;
        bool lo = true, hi = true;
        int finite = 0;
        for (double kap : rec.kappas) {
            if (std::isinf(kap))
                continue;
            ++finite;
            lo = lo && kap >= -ae - tol;
            hi = hi && kap <= (m - 1) * ae + h + tol;
        }
        out.lower_ok += lo;
        out.upper_ok += hi && finite > 0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunOutput {
    std::vector<Table> tables;
    std::vector<std::pair<std::string, std::string>> plots;  ///< file stem, svg text
    bool any_fails() const
    {
        for (const auto& t : tables)
            if (t.count_verdict("fails"))
                return true;
        return false;
    }
};

namespace detail {

inline std::string run_id(const RunConfig& cfg, std::size_t k)
{
    std::string idx = std::to_string(k);
    return cfg.hash.substr(0, 8) + "-" + std::string(idx.size() < 4 ? 4 - idx.size() : 0, '0') + idx;
}

/// Scene instances over the resolution list, scene-major.
inline std::vector<ClosedSetSample> scene_instances(const RunConfig& cfg)
{
    std::vector<ClosedSetSample> out;
    for (const auto& s : cfg.scenes) {
        if (cfg.resolutions.empty()) {
            out.push_back(build_scene(s));
            continue;
        }
        for (double rho : cfg.resolutions) {
            auto t = s;
            t.rho = rho;
            out.push_back(build_scene(t));
        }
    }
    return out;
}

inline std::string fmt(double v) { return format_real(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

inline Vec base_point(const RunConfig& cfg, int n)
{
    if (cfg.x0.empty())
        return Vec::Zero(n);
    if (static_cast<int>(cfg.x0.size()) != n)
        throw Error("x0 has " + std::to_string(cfg.x0.size()) + " coordinates, scene has n = " + std::to_string(n));
    return Eigen::Map<const Vec>(cfg.x0.data(), n);
}

inline void run_contact(const RunConfig& cfg, const std::vector<ClosedSetSample>& scenes, RunOutput& out, unsigned threads)
{
    Table t{"contact", {"run_id", "scene", "n", "rho", "a", "config_hash", "centers", "pairs", "projected", "boundary_touch", "verdict"}, {}};
    for (const auto& g : scenes)
        for (double a : cfg.openings) {
            const auto C = CenterGrid::ball(g.n(), g.rho(), cfg.center_radius);
            const auto A = contact_set(g, a, C, threads);
            const auto P = project_contact_set(A);
            t.add({run_id(cfg, t.rows.size()), g.id(), fmt(g.n()), fmt(g.rho()), fmt(a), cfg.hash, fmt(C.centers.size()),
                   fmt(A.pairs.size()), fmt(P.size()), A.boundary_touch ? "yes" : "no",
                   A.empty() ? "empty-contact-set" : "nonempty"});
            if (cfg.svg && (g.n() == 1 || g.n() == 2)) {
                SvgPlot plot("A' of " + g.id() + " a=" + fmt(a) + " rho=" + fmt(g.rho()), -1, 1, -1, 1);
                plot.circle_outline(0, 0, 1);
                for (std::size_t i = 0; i < P.size(); ++i)
                    plot.dot(P[i][0], g.n() == 2 ? P[i][1] : 0.0, 1.0);
                out.plots.emplace_back("contact_" + std::to_string(t.rows.size() - 1), plot.str());
            }
        }
    out.tables.push_back(std::move(t));
}

inline void run_curvature(const RunConfig& cfg, const std::vector<ClosedSetSample>& scenes, RunOutput& out, unsigned threads)
{
    Table t{"curvature", {"run_id", "scene", "n", "m", "h", "rho", "a", "config_hash", "pairs", "rim_pairs", "valid",
                          "sentinel_fraction", "lower_fraction", "upper_fraction", "verdict"}, {}};
    for (const auto& g : scenes)
        for (double a : cfg.openings) {
            const int m = cfg.m.value_or(g.intrinsic_dim());
            const double h = cfg.h.value_or(g.mc_bound());
            const auto A = contact_set(g, a, CenterGrid::ball(g.n(), g.rho(), cfg.center_radius), threads);
            const auto b = contact_curvature_bounds(g, A, m, h, cfg.curvature_pairs, cfg.curvature_step, threads);
            std::string verdict = "inconclusive";
            if (b.valid > 0)
                verdict = b.lower_fraction() >= 0.95 && b.upper_fraction() >= 0.95 ? "holds" : "fails";
            t.add({run_id(cfg, t.rows.size()), g.id(), fmt(g.n()), fmt(m), fmt(h), fmt(g.rho()), fmt(a), cfg.hash,
                   fmt(b.pairs), fmt(b.rim), fmt(b.valid),
                   fmt(b.valid ? static_cast<double>(b.sentinel) / static_cast<double>(b.valid) : 0.0),
                   fmt(b.lower_fraction()), fmt(b.upper_fraction()), verdict});
        }
    out.tables.push_back(std::move(t));
}

inline void run_viscosity(const RunConfig& cfg, const std::vector<ClosedSetSample>& scenes, RunOutput& out)
{
    Table t{"viscosity", {"run_id", "scene", "n", "m", "h", "rho", "config_hash", "seed", "trials", "admissible",
                          "violations", "pass_rate", "worst_margin", "witness_base", "witness_trace", "witness_bound",
                          "verdict"}, {}};
    for (const auto& g : scenes) {
        const int m = cfg.m.value_or(g.intrinsic_dim());
        const double h = cfg.h.value_or(g.mc_bound());
        const auto v = viscosity_test(g, m, h, cfg.trials, cfg.seed);
        t.add({run_id(cfg, t.rows.size()), g.id(), fmt(g.n()), fmt(m), fmt(h), fmt(g.rho()), cfg.hash,
               std::to_string(cfg.seed), fmt(v.trials), fmt(v.admissible), fmt(v.violations), fmt(v.pass_rate()),
               fmt(v.worst_margin), v.witness ? join_vec(v.witness->base) : "-",
               v.witness ? fmt(v.witness->trace_m) : "-", v.witness ? fmt(v.witness->bound) : "-", v.verdict()});
    }
    out.tables.push_back(std::move(t));
}

inline void run_abp(const RunConfig& cfg, const std::vector<ClosedSetSample>& scenes, RunOutput& out, unsigned threads)
{
    Table t{"abp", {"run_id", "scene", "n", "m", "h", "a", "rho", "lhs", "lhs_err", "gamma", "factor1", "factor2",
                    "measure_term", "measure_err", "rhs", "margin", "flags", "verdict"}, {}};
    // margin against rho per (scene, a) for the plot
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> curves;
    for (const auto& g : scenes)
        for (double a : cfg.openings) {
            const int m = cfg.m.value_or(g.intrinsic_dim());
            const double h = cfg.h.value_or(g.mc_bound());
            AbpOptions opt;
            opt.viscosity_trials = cfg.trials;
            opt.viscosity_seed = cfg.seed;
            opt.threads = threads;
            const auto C = CenterGrid::ball(g.n(), g.rho(), cfg.center_radius);
            const auto r = m == g.n() ? abp_codim1(g, h, a, C, opt) : abp_general(g, m, h, a, C, opt);
            t.add({run_id(cfg, t.rows.size()), r.scene, fmt(r.n), fmt(r.m), fmt(r.h), fmt(r.a), fmt(r.rho),
                   fmt(r.lhs.value), fmt(r.lhs.error_bound), fmt(r.constants.gamma), fmt(r.constants.factor1),
                   fmt(r.constants.factor2), fmt(r.measure.value), fmt(r.measure.error_bound), fmt(r.rhs),
                   fmt(r.margin), r.flags(), abp_verdict_tag(r.verdict)});
            const std::string key = g.id() + " a=" + fmt(a);
            auto it = std::find_if(curves.begin(), curves.end(), [&](const auto& c) { return c.first == key; });
            if (it == curves.end()) {
                curves.push_back({key, {}});
                it = std::prev(curves.end());
            }
            it->second.emplace_back(std::log2(r.rho), r.margin);
        }
    if (cfg.svg && !t.rows.empty()) {
        double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
        for (const auto& [key, pts] : curves)
            for (const auto& [x, y] : pts) {
                x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
            }
        SvgPlot plot("ABP margin vs log2 rho", x0 - 0.5, x1 + 0.5, std::min(0.0, y0), std::max(0.0, y1) * 1.1 + 1e-9);
        for (const auto& [key, pts] : curves) {
            plot.polyline(pts);
            plot.label(pts.front().first, pts.front().second, key);
        }
        out.plots.emplace_back("abp_margin", plot.str());
    }
    out.tables.push_back(std::move(t));
}

inline void run_harnack(const RunConfig& cfg, const std::vector<ClosedSetSample>& scenes, RunOutput& out, unsigned threads)
{
    // barrier certificates, one block per horizontal dimension in the suite
    Table cert{"barrier", {"run_id", "n", "gamma", "safety", "theta", "a", "h_over_a", "step", "checked", "violations",
                           "worst", "verdict"}, {}};
    std::vector<int> dims;
    for (const auto& g : scenes)
        if (std::find(dims.begin(), dims.end(), g.n()) == dims.end())
            dims.push_back(g.n());
    std::sort(dims.begin(), dims.end());
    const std::vector<double> ratios{0.0, 0.25, 0.5, 0.75, 0.99};
    for (int n : dims) {
        if (n > 2)
            continue;  // the annulus grid grows as (2048)^n
        const auto gc = calibrate_gamma(n, cfg.safety);
        const double theta = calibrate_theta(gc.gamma);
        BarrierSpec s;
        s.gamma = gc.gamma;
        s.r = 0.5;
        s.x0 = Vec::Zero(n);
        s.anchor = {Vec::Zero(n), std::min(1.0 / (theta + 1.0), barrier_opening_limit(gc.gamma)), 0.0};
        const double step = n == 1 ? s.r / 1024 : s.r / 256;
        const auto certs = certify_barrier(s, ratios, step, threads);
        for (std::size_t j = 0; j < certs.size(); ++j)
            cert.add({run_id(cfg, cert.rows.size()), fmt(n), fmt(gc.gamma), fmt(cfg.safety), fmt(theta), fmt(s.a()),
                      fmt(ratios[j]), fmt(step), fmt(certs[j].checked), fmt(certs[j].violations), fmt(certs[j].worst),
                      certs[j].pass() ? "holds" : "fails"});
    }

    Table mtp{"measure_to_point", {"run_id", "scene", "n", "rho", "h", "gamma", "theta", "alpha", "a", "r", "x0", "slide",
                                   "slide_bound", "beta_hat", "beta_err", "issue", "verdict"}, {}};
    for (const auto& g : scenes) {
        const auto gc = calibrate_gamma(g.n(), cfg.safety);
        const double theta = calibrate_theta(gc.gamma);
        const double a = std::min(1.0 / (theta + 1.0), barrier_opening_limit(gc.gamma));
        const Vec x0 = base_point(cfg, g.n());
        const double h = cfg.h.value_or(g.mc_bound());
        for (double r : cfg.radii) {
            MeasureToPointOptions opt;
            opt.threads = threads;
            opt.seed = cfg.seed;
            const auto rep = measure_to_point(g, h, a, x0, r, gc.gamma, theta, opt);
            mtp.add({run_id(cfg, mtp.rows.size()), g.id(), fmt(g.n()), fmt(g.rho()), fmt(h), fmt(gc.gamma), fmt(theta),
                     fmt(rep.alpha), fmt(a), fmt(r), join_vec(x0), fmt(rep.slide), fmt(rep.slide_bound),
                     rep.ok() ? fmt(rep.beta_hat) : "-", rep.ok() ? fmt(rep.beta_error) : "-",
                     harnack_issue_tag(rep.issue), rep.ok() ? "measured" : "hypothesis-violated"});
        }
    }

    Table wh{"harnack", {"run_id", "scene", "rho", "h", "alpha", "k", "eps", "F_j", "residual", "issue", "verdict"}, {}};
    for (const auto& g : scenes) {
        HarnackOptions opt;
        opt.threads = threads;
        const double h = cfg.h.value_or(g.mc_bound());
        const auto rep = weak_harnack_check(g, h, cfg.alpha, cfg.k, cfg.mu, opt);
        std::vector<double> fj;
        for (const auto& l : rep.levels)
            fj.push_back(l.measure.value);
        const bool pre = rep.issue == HarnackIssue::None || rep.issue == HarnackIssue::TouchNotContained;
        wh.add({run_id(cfg, wh.rows.size()), g.id(), fmt(g.rho()), fmt(h), fmt(cfg.alpha), fmt(cfg.k), fmt(rep.eps),
                join_reals(fj), pre ? fmt(rep.residual) : "-", harnack_issue_tag(rep.issue),
                pre ? rep.verdict : "hypothesis-violated"});
        if (cfg.svg && !fj.empty()) {
            SvgPlot plot("F_j ladder, " + g.id() + " rho=" + fmt(g.rho()), -0.5, fj.size() - 0.5, 0.0,
                         std::max(rep.ball_measure, 1e-12) * 1.05);
            for (std::size_t j = 0; j < fj.size(); ++j)
                plot.bar(static_cast<double>(j), 0.6, fj[j]);
            plot.label(-0.4, rep.ball_measure, "|B(0,1/3)|");
            out.plots.emplace_back("harnack_" + std::to_string(wh.rows.size() - 1), plot.str());
        }
    }
    out.tables.push_back(std::move(cert));
    out.tables.push_back(std::move(mtp));
    out.tables.push_back(std::move(wh));
}

} // namespace detail

/// Runs the selected pipelines over the parameter grid. Rows follow the
/// config order (scene, resolution, opening), so output bytes do not depend
/// on the thread count.
inline RunOutput run(const RunConfig& cfg, Operation op, unsigned threads = default_threads())
{
    RunOutput out;
    const auto scenes = detail::scene_instances(cfg);
    const bool all = op == Operation::All;
    if (all || op == Operation::Contact)
        detail::run_contact(cfg, scenes, out, threads);
    if (all || op == Operation::Curvature)
        detail::run_curvature(cfg, scenes, out, threads);
    if (all || op == Operation::Viscosity)
        detail::run_viscosity(cfg, scenes, out);
    if (all || op == Operation::Abp)
        detail::run_abp(cfg, scenes, out, threads);
    if (all || op == Operation::Harnack)
        detail::run_harnack(cfg, scenes, out, threads);
    return out;
}

/// One row per table: rows and verdict tallies.
inline Table summary_table(const RunOutput& out, const RunConfig& cfg)
{
    Table t{"summary", {"table", "config_hash", "rows", "holds", "fails", "hypothesis_violated", "other"}, {}};
    for (const auto& tab : out.tables) {
        const std::size_t h = tab.count_verdict("holds"), f = tab.count_verdict("fails"),
                          v = tab.count_verdict("hypothesis-violated");
        t.add({tab.name, cfg.hash, std::to_string(tab.rows.size()), std::to_string(h), std::to_string(f), std::to_string(v),
               std::to_string(tab.rows.size() - h - f - v)});
    }
    return t;
}

/// Writes <name>.csv per table and <stem>.svg per plot into dir.
inline std::vector<std::filesystem::path> write_outputs(const RunOutput& out, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot write '" + p.string() + "'");
        f << text;
        if (!f)
            throw std::runtime_error("write failed for '" + p.string() + "'");
        written.push_back(p);
    };
    for (const auto& t : out.tables) {
        std::ostringstream os;
        emit_table(t, os);
        put(dir / (t.name + ".csv"), os.str());
    }
    for (const auto& [stem, svg] : out.plots)
        put(dir / (stem + ".svg"), svg);
    return written;
}

} // namespace slp
