#include "bubblesim/report_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace bubblesim {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

void summary_row(std::ofstream& out, const std::string& section, const std::string& name,
                 double value) {
    out << section << "," << name << "," << format_number(value) << ",,\n";
}

void summary_estimate(std::ofstream& out, const std::string& section, const std::string& name,
                      const MonteCarloEstimate& e) {
    out << section << "," << name << "," << format_number(e.mean) << ","
        << format_number(e.std_error) << "," << e.n << "\n";
}

void summary_quantiles(std::ofstream& out, const std::string& section, const std::string& name,
                       const QuantileSummary& q) {
    out << section << "," << name << "_mean," << format_number(q.mean) << ",," << q.n << "\n";
    out << section << "," << name << "_p10," << format_number(q.p10) << ",," << q.n << "\n";
    out << section << "," << name << "_p50," << format_number(q.p50) << ",," << q.n << "\n";
    out << section << "," << name << "_p90," << format_number(q.p90) << ",," << q.n << "\n";
}

}  // namespace

std::string format_number(double x) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", x);
    return buffer;
}

RunArtifacts write_run_artifacts(const ScenarioOutput& output, const std::string& out_dir,
                                 const std::string& library_version) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    RunArtifacts artifacts;
    const ScenarioConfig& cfg = output.config;

    // Summary table: section,name,value,std_error,n
    artifacts.summary_path = (fs::path(out_dir) / "summary.csv").string();
    {
        std::ofstream out = open_out(artifacts.summary_path);
        out << "section,name,value,std_error,n\n";
        for (std::size_t k = 0; k < output.bankruptcy.size(); ++k) {
            const auto& bk = output.bankruptcy[k];
            const std::string section = "bankruptcy_agent" + std::to_string(k + 1);
            summary_row(out, section, "frequency", bk.frequency);
            summary_row(out, section, "grid_frequency", bk.grid_frequency);
            summary_row(out, section, "count", static_cast<double>(bk.count));
        }
        for (const auto& cs : output.checkpoints) {
            const std::string section = "checkpoint_t=" + format_number(cs.time);
            summary_row(out, section, "solvent_paths", static_cast<double>(cs.solvent_paths));
            summary_quantiles(out, section, "rate", cs.rate);
            for (std::size_t c = 0; c < cs.mpr.size(); ++c)
                summary_quantiles(out, section, "mpr_" + std::to_string(c + 1), cs.mpr[c]);
            for (std::size_t k = 0; k < cs.agent_mpr.size(); ++k)
                for (std::size_t c = 0; c < cs.agent_mpr[k].size(); ++c)
                    summary_quantiles(out, section,
                                      "mpr_agent" + std::to_string(k + 1) + "_" +
                                          std::to_string(c + 1),
                                      cs.agent_mpr[k][c]);
            for (std::size_t k = 0; k < cs.density_mean.size(); ++k)
                summary_estimate(out, section, "density_mean_agent" + std::to_string(k + 1),
                                 cs.density_mean[k]);
        }
        for (std::size_t k = 0; k < output.market_bubbles.size(); ++k) {
            const auto& report = output.market_bubbles[k];
            const std::string section = "bubble_agent" + std::to_string(k + 1);
            summary_row(out, section, "market_price", report.market_price);
            summary_estimate(out, section, "fundamental_reference",
                             report.fundamental_reference);
            summary_estimate(out, section, "fundamental_subjective",
                             report.fundamental_subjective);
            summary_estimate(out, section, "bubble", report.bubble);
            summary_estimate(out, section, "tail_term", report.tail_term);
            summary_estimate(out, section, "decomposition_residual",
                             report.decomposition_residual);
            summary_estimate(out, section, "riskless_bubble", output.riskless_bubbles[k]);
        }
        summary_estimate(out, "deflator", "stopped_value", output.deflator_check);
        summary_row(out, "deflator", "target", output.deflator_target);
        for (const auto& lim : output.limiting) {
            const std::string section = "limiting_agent" + std::to_string(lim.agent + 1);
            summary_row(out, section, "count", static_cast<double>(lim.count));
            summary_row(out, section, "median_rel_error", lim.median_rel_error);
            summary_row(out, section, "p90_rel_error", lim.p90_rel_error);
        }
        if (output.burst) {
            summary_row(out, "burst", "sigma_count", static_cast<double>(output.burst->sigma_count));
            summary_row(out, "burst", "eligible_count",
                        static_cast<double>(output.burst->eligible_count));
            summary_row(out, "burst", "order_violations",
                        static_cast<double>(output.burst->order_violations));
            summary_estimate(out, "burst", "post_sigma_bubble", output.burst->post_sigma_bubble);
        }
        if (output.law) {
            summary_row(out, "law_equality", "t_star", output.law->t_star);
            summary_row(out, "law_equality", "ks_distance", output.law->ks_distance);
            summary_row(out, "law_equality", "p_value", output.law->p_value);
            summary_row(out, "law_equality", "swap_distance", output.law->swap_distance);
            summary_row(out, "law_equality", "n_a", static_cast<double>(output.law->n_a));
            summary_row(out, "law_equality", "n_b", static_cast<double>(output.law->n_b));
        }
        const auto& inv = output.invariants;
        summary_row(out, "invariants", "max_rel_price_identity", inv.max_rel_price_identity);
        summary_row(out, "invariants", "max_rel_wealth_identity", inv.max_rel_wealth_identity);
        summary_row(out, "invariants", "max_rel_rate_identity", inv.max_rel_rate_identity);
        summary_row(out, "invariants", "max_rel_strategy_identity",
                    inv.max_rel_strategy_identity);
        summary_row(out, "invariants", "clearing_violations",
                    static_cast<double>(inv.clearing_violations));
        summary_row(out, "invariants", "no_resurrection_violations",
                    static_cast<double>(inv.no_resurrection_violations));
    }

    // One file per path-statistic quantity, header row naming grid times.
    const TimeGrid grid = cfg.grid();
    for (const auto& series : output.series) {
        const std::string path = (fs::path(out_dir) / ("series_" + series.name + ".csv")).string();
        std::ofstream out = open_out(path);
        out << "stat";
        for (int j = 0; j <= grid.n_steps; ++j) out << "," << format_number(grid.time(j));
        out << "\n";
        out << "mean";
        for (double v : series.mean) out << "," << format_number(v);
        out << "\n";
        out << "count";
        for (std::size_t c : series.count) out << "," << c;
        out << "\n";
        artifacts.series_paths.push_back(path);
    }

    // Manifest: config echo plus provenance, written last so it can list
    // every artifact.
    artifacts.manifest_path = (fs::path(out_dir) / "manifest.txt").string();
    {
        std::ofstream out = open_out(artifacts.manifest_path);
        out << "library_version = " << library_version << "\n";
        out << "scenario.kind = \"" << to_string(cfg.kind) << "\"\n";
        out << "scenario.D0 = " << format_number(cfg.d0) << "\n";
        out << "scenario.a = " << format_number(cfg.drift) << "\n";
        out << "scenario.v = ";
        for (std::size_t c = 0; c < cfg.vol.size(); ++c)
            out << (c ? ", " : "") << format_number(cfg.vol[c]);
        out << "\n";
        if (cfg.kind == ScenarioKind::drawdown_pair)
            out << "scenario.kappa = " << format_number(cfg.kappa) << "\n";
        if (cfg.kind == ScenarioKind::two_stock) {
            out << "scenario.psi0 = " << format_number(cfg.psi0) << "\n";
            out << "scenario.v_psi = ";
            for (std::size_t c = 0; c < cfg.v_psi.size(); ++c)
                out << (c ? ", " : "") << format_number(cfg.v_psi[c]);
            out << "\n";
        }
        out << "agents.w = ";
        for (std::size_t k = 0; k < cfg.wealth.size(); ++k)
            out << (k ? ", " : "") << format_number(cfg.wealth[k]);
        out << "\n";
        out << "simulation.T = " << format_number(cfg.horizon) << "\n";
        out << "simulation.rho = " << format_number(cfg.rho) << "\n";
        out << "simulation.n_steps = " << cfg.n_steps << "\n";
        out << "simulation.n_paths = " << cfg.n_paths << "\n";
        out << "simulation.seed = " << cfg.seed << "\n";
        out << "simulation.bridge = " << (cfg.bridge ? "true" : "false") << "\n";
        out << "duration_seconds = " << format_number(output.duration_seconds) << "\n";
        out << "output.summary = " << artifacts.summary_path << "\n";
        for (const auto& p : artifacts.series_paths) out << "output.series = " << p << "\n";
    }
    return artifacts;
}

}  // namespace bubblesim
