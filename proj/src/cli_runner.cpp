#include "gmvi/cli_runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include "gmvi/catalysis.hpp"
#include "gmvi/diffusion.hpp"
#include "gmvi/fit.hpp"
#include "gmvi/mcmc.hpp"
#include "gmvi/mixture.hpp"
#include "gmvi/numeric_io.hpp"

namespace gmvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void require_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
}

double get_number(const nlohmann::json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError("\"" + key + "\" must be a number");
    return obj[key].get<double>();
}

long get_integer(const nlohmann::json& obj, const std::string& key, long fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        throw ConfigError("\"" + key + "\" must be an integer");
    return obj[key].get<long>();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("short write to " + path.string());
}

std::string stamp_line(const ExperimentConfig& cfg) {
    return "# config_hash=" + cfg.config_hash + " seed=" + std::to_string(cfg.seed) + "\n";
}

nlohmann::json stamped_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["config_hash"] = cfg.config_hash;
    j["seed"] = cfg.seed;
    j["problem"] = cfg.problem;
    return j;
}

// Everything run_experiment needs to know about one named problem.
struct ProblemSetup {
    std::shared_ptr<JointDensityModel> model;
    std::vector<std::string> names;  // one per model coordinate
    FitConfig fit;
    MalaConfig mala;
    Eigen::VectorXd mala_start;
    bool catalysis = false;
};

// xi -> A xi for the built-in conjugate check problem. The columns of A are
// orthogonal, so the exact posterior covariance is diagonal and the
// diagonal-Gaussian family can represent it with no gap.
class LinearForwardModel : public ForwardModel {
  public:
    explicit LinearForwardModel(Eigen::MatrixXd a) : a_(std::move(a)) {}
    int input_dim() const override { return static_cast<int>(a_.cols()); }
    int output_dim() const override { return static_cast<int>(a_.rows()); }
    ForwardEval evaluate(const Eigen::VectorXd& xi, bool want_jacobian,
                         bool want_hess_diag) const override {
        ForwardEval e;
        e.value = a_ * xi;
        if (want_jacobian) {
            e.jacobian = a_;
            e.has_jacobian = true;
        }
        if (want_hess_diag) {
            e.hess_diag = Eigen::MatrixXd::Zero(a_.rows(), a_.cols());
            e.has_hess_diag = true;
        }
        return e;
    }

  private:
    Eigen::MatrixXd a_;
};

FitConfig merge_fit(FitConfig base, const nlohmann::json& o, std::uint64_t seed) {
    base.components = static_cast<int>(get_integer(o, "components", base.components));
    base.restarts = static_cast<int>(get_integer(o, "restarts", base.restarts));
    base.tolerance = get_number(o, "tolerance", base.tolerance);
    base.variance_lo = get_number(o, "variance_lo", base.variance_lo);
    base.variance_hi = get_number(o, "variance_hi", base.variance_hi);
    base.max_sweeps = static_cast<int>(get_integer(o, "max_sweeps", base.max_sweeps));
    base.max_inner_iterations =
        static_cast<int>(get_integer(o, "max_inner_iterations", base.max_inner_iterations));
    base.seed = seed;
    if (base.components < 1) throw ConfigError("fit.components must be at least 1");
    if (base.restarts < 1) throw ConfigError("fit.restarts must be at least 1");
    if (!(base.tolerance > 0.0)) throw ConfigError("fit.tolerance must be positive");
    if (!(base.variance_lo > 0.0) || !(base.variance_lo < base.variance_hi))
        throw ConfigError("fit variance bounds must satisfy 0 < lo < hi");
    if (base.max_sweeps < 1 || base.max_inner_iterations < 1)
        throw ConfigError("fit iteration caps must be at least 1");
    return base;
}

MalaConfig merge_mala(MalaConfig base, const nlohmann::json& o, std::uint64_t seed,
                      bool fast) {
    base.dt = get_number(o, "dt", base.dt);
    base.burn_in = get_integer(o, "burn_in", base.burn_in);
    base.thinning = get_integer(o, "thinning", base.thinning);
    base.total_steps = get_integer(o, "total_steps", base.total_steps);
    base.jump_probability = get_number(o, "jump_probability", base.jump_probability);
    base.jump_coordinate =
        static_cast<int>(get_integer(o, "jump_coordinate", base.jump_coordinate));
    base.jump_center = get_number(o, "jump_center", base.jump_center);
    base.seed = seed;
    if (fast) {
        base.total_steps = std::min(base.total_steps, 20000l);
        base.burn_in = std::min(base.burn_in, 2000l);
    }
    if (!(base.dt > 0.0)) throw ConfigError("mala.dt must be positive");
    if (base.burn_in < 0 || base.thinning < 1 ||
        base.total_steps <= base.burn_in)
        throw ConfigError("mala step counts must satisfy 0 <= burn_in < total_steps, thinning >= 1");
    if (base.jump_probability < 0.0 || base.jump_probability >= 1.0)
        throw ConfigError("mala.jump_probability must lie in [0, 1)");
    return base;
}

SensorLayout layout_of(const std::string& problem) {
    return problem == "diffusion-corners" ? SensorLayout::kCorners
                                          : SensorLayout::kMidpoints;
}

// Reads a "sensor,time,value" CSV (comment lines allowed) and returns the
// readings in the model's storage order: time-major, sensor index fastest.
Eigen::VectorXd load_diffusion_csv(const std::filesystem::path& path, int sensors,
                                   const std::vector<double>& times) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read data file " + path.string());

    const int K = static_cast<int>(times.size());
    Eigen::VectorXd y(static_cast<long>(K) * sensors);
    std::vector<bool> seen(y.size(), false);

    std::string line;
    bool header_done = false;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_done) {
            if (line != "sensor,time,value")
                throw ConfigError(path.string() + ": expected header sensor,time,value");
            header_done = true;
            continue;
        }
        std::istringstream row(line);
        std::string s_field, t_field, v_field;
        if (!std::getline(row, s_field, ',') || !std::getline(row, t_field, ',') ||
            !std::getline(row, v_field) || v_field.find(',') != std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected three comma-separated fields");
        int s = -1, k = -1;
        double t = 0.0, v = 0.0;
        try {
            s = std::stoi(s_field);
            t = std::stod(t_field);
            v = std::stod(v_field);
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": malformed number");
        }
        for (int i = 0; i < K; ++i)
            if (std::abs(t - times[i]) < 1e-9) k = i;
        if (k < 0)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": time " + t_field + " is not a configured measurement time");
        if (s < 0 || s >= sensors)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": sensor index out of range");
        const long idx = static_cast<long>(k) * sensors + s;
        if (seen[idx])
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": duplicate reading for sensor " + s_field + " at time " +
                              t_field);
        seen[idx] = true;
        y[idx] = v;
    }
    for (long i = 0; i < y.size(); ++i)
        if (!seen[i])
            throw ConfigError(path.string() + ": missing reading for sensor " +
                              std::to_string(i % sensors) + " at time " +
                              format_double(times[i / sensors]));
    return y;
}

ProblemSetup assemble_problem(const ExperimentConfig& cfg) {
    ProblemSetup p;

    if (cfg.problem == "catalysis") {
        if (cfg.data.empty())
            throw ConfigError("catalysis needs \"data\": path to the concentration table");
        if (!std::filesystem::exists(cfg.data))
            throw ConfigError("data file " + cfg.data.string() + " does not exist");
        Eigen::VectorXd y;
        try {
            y = load_catalysis_observations(cfg.data.string());
        } catch (const std::exception& e) {
            throw ConfigError(cfg.data.string() + ": " + e.what());
        }
        p.model = make_catalysis_model(std::move(y));
        p.names = {"xi1", "xi2", "xi3", "xi4", "xi5", "theta"};
        p.catalysis = true;

        p.fit.components = 1;
        p.fit.init.assign(5, {DimensionInit::Kind::Gaussian, 0.0, 1.0});
        p.fit.init.push_back({DimensionInit::Kind::Gaussian, -1.0, 1.0});

        p.mala_start = Eigen::VectorXd::Zero(6);
        p.mala_start[5] = -1.0;
    } else if (cfg.problem == "diffusion-corners" || cfg.problem == "diffusion-midpoints") {
        if (cfg.data.empty())
            throw ConfigError(cfg.problem +
                              " needs \"data\": path to a sensor,time,value CSV");
        if (!std::filesystem::exists(cfg.data))
            throw ConfigError("data file " + cfg.data.string() + " does not exist");
        const SensorLayout layout = layout_of(cfg.problem);
        DiffusionSettings settings;
        settings.grid = cfg.fast ? 15 : 25;
        const int sensors = static_cast<int>(sensor_positions(layout).size());
        Eigen::VectorXd y =
            load_diffusion_csv(cfg.data, sensors, settings.measurement_times);
        p.model = make_diffusion_model(layout, std::move(y), settings);
        p.names = {"x", "y", "theta"};

        p.fit.components = cfg.problem == "diffusion-midpoints" ? 2 : 1;
        p.fit.variance_hi = 1.0 / 12.0;  // the box's own uniform variance
        p.fit.mean_lo = Eigen::Vector3d(0.01, 0.01, -kInf);
        p.fit.mean_hi = Eigen::Vector3d(0.99, 0.99, kInf);
        p.fit.init.assign(2, {DimensionInit::Kind::Uniform, 0.01, 0.99});
        p.fit.init.push_back({DimensionInit::Kind::Gaussian, -1.0, 1.0});

        p.mala_start = Eigen::Vector3d(0.5, 0.5, -1.0);
        if (cfg.problem == "diffusion-midpoints") {
            // Mirror kernel across x = 1/2 so the chain visits both of the
            // symmetric posterior modes.
            p.mala.jump_probability = 0.25;
            p.mala.jump_coordinate = 0;
            p.mala.jump_center = 0.5;
        }
    } else if (cfg.problem == "linear-gaussian") {
        if (!cfg.data.empty())
            throw ConfigError("linear-gaussian is self-contained and takes no data file");
        Eigen::MatrixXd a(3, 2);
        a << 2.0, 0.0, 0.0, 0.5, 0.0, 0.0;
        Eigen::Vector3d y(1.0, 0.25, -0.5);
        p.model = std::make_shared<JointDensityModel>(
            std::make_shared<LinearForwardModel>(a),
            std::make_shared<FixedGaussianLikelihood>(0.5),
            std::make_shared<GaussianPrior>(Eigen::VectorXd::Zero(2),
                                            Eigen::VectorXd::Ones(2)),
            nullptr, y);
        p.names = {"w1", "w2"};

        p.fit.components = 1;
        p.fit.init.assign(2, {DimensionInit::Kind::Gaussian, 0.0, 1.0});

        p.mala_start = Eigen::VectorXd::Zero(2);
    } else {
        throw ConfigError("unknown problem \"" + cfg.problem + "\"");
    }

    p.fit = merge_fit(p.fit, cfg.fit, cfg.seed);
    p.mala = merge_mala(p.mala, cfg.mala, cfg.seed, cfg.fast);
    return p;
}

// Median and central 95% interval of exp(coordinate) / scale, from either a
// mixture state or chain samples. exp is monotone, so quantiles commute.
nlohmann::json lognormal_summary(double q025, double q50, double q975, double scale) {
    nlohmann::json j;
    j["median"] = std::exp(q50) / scale;
    j["lo95"] = std::exp(q025) / scale;
    j["hi95"] = std::exp(q975) / scale;
    return j;
}

double empirical_quantile(Eigen::VectorXd column, double p) {
    std::sort(column.begin(), column.end());
    const long n = column.size();
    const double pos = p * (n - 1);
    const long i = static_cast<long>(pos);
    if (i + 1 >= n) return column[n - 1];
    const double frac = pos - i;
    return column[i] * (1.0 - frac) + column[i + 1] * frac;
}

void add_catalysis_extras(nlohmann::json& summary, const MixtureState* state,
                          const Eigen::MatrixXd* samples) {
    nlohmann::json rates = nlohmann::json::array();
    const auto quantile = [&](int j, double prob) {
        return state ? mixture_marginal_quantile(*state, j, prob)
                     : empirical_quantile(samples->col(j), prob);
    };
    for (int j = 0; j < 5; ++j) {
        nlohmann::json r = lognormal_summary(quantile(j, 0.025), quantile(j, 0.5),
                                             quantile(j, 0.975), 180.0);
        r["name"] = "k" + std::to_string(j + 1);
        r["unit"] = "1/min";
        rates.push_back(std::move(r));
    }
    summary["rate_constants"] = std::move(rates);
    summary["noise_level"] =
        lognormal_summary(quantile(5, 0.025), quantile(5, 0.5), quantile(5, 0.975), 1.0);
}

std::string marginals_csv_from_state(const ExperimentConfig& cfg, const ProblemSetup& p,
                                     const MixtureState& q) {
    const MixtureMoments m = mixture_moments(q);
    std::string out = stamp_line(cfg) + "parameter,x,density\n";
    for (int j = 0; j < q.dim(); ++j) {
        const double lo = m.mean[j] - 4.0 * m.stddev[j];
        const double hi = m.mean[j] + 4.0 * m.stddev[j];
        for (int g = 0; g <= 200; ++g) {
            const double x = lo + (hi - lo) * g / 200.0;
            double density = 0.0;
            for (int i = 0; i < q.components(); ++i) {
                const double v = q.variances(i, j);
                const double z = x - q.means(i, j);
                density += q.weights[i] *
                           std::exp(-0.5 * z * z / v) / std::sqrt(2.0 * std::numbers::pi * v);
            }
            out += p.names[j] + "," + format_double(x) + "," + format_double(density) + "\n";
        }
    }
    return out;
}

std::string marginals_csv_from_chain(const ExperimentConfig& cfg, const ProblemSetup& p,
                                     const Eigen::MatrixXd& samples) {
    std::string out = stamp_line(cfg) + "parameter,x,density\n";
    const long n = samples.rows();
    const int bins = 60;
    for (int j = 0; j < samples.cols(); ++j) {
        const double lo = samples.col(j).minCoeff();
        const double hi = samples.col(j).maxCoeff();
        const double width = (hi - lo) / bins;
        if (!(width > 0.0)) continue;  // degenerate column
        std::vector<long> counts(bins, 0);
        for (long i = 0; i < n; ++i) {
            int b = static_cast<int>((samples(i, j) - lo) / width);
            counts[std::min(b, bins - 1)]++;
        }
        for (int b = 0; b < bins; ++b) {
            const double center = lo + (b + 0.5) * width;
            const double density = counts[b] / (n * width);
            out += p.names[j] + "," + format_double(center) + "," +
                   format_double(density) + "\n";
        }
    }
    return out;
}

}  // namespace

nlohmann::json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const CliOverrides& overrides) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    require_keys(doc,
                 {"problem", "method", "seed", "out", "fast", "data", "fit", "mala",
                  "truth"},
                 "the config");

    ExperimentConfig cfg;
    if (!doc.contains("problem") || !doc["problem"].is_string())
        throw ConfigError("config needs a \"problem\" string");
    cfg.problem = doc["problem"].get<std::string>();
    static const std::set<std::string> kProblems{
        "catalysis", "diffusion-corners", "diffusion-midpoints", "linear-gaussian"};
    if (!kProblems.count(cfg.problem))
        throw ConfigError("unknown problem \"" + cfg.problem + "\"");

    if (doc.contains("method")) {
        if (!doc["method"].is_string() ||
            (doc["method"] != "vi" && doc["method"] != "mala"))
            throw ConfigError("\"method\" must be \"vi\" or \"mala\"");
        cfg.method = doc["method"].get<std::string>();
    }

    if (overrides.seed) {
        cfg.seed = *overrides.seed;
    } else if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer() || doc["seed"].get<long long>() < 0)
            throw ConfigError("\"seed\" must be a nonnegative integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    } else {
        throw ConfigError("a seed is mandatory: set \"seed\" in the config or pass --seed");
    }

    if (overrides.out) {
        cfg.out = *overrides.out;
    } else if (doc.contains("out")) {
        if (!doc["out"].is_string()) throw ConfigError("\"out\" must be a string");
        cfg.out = doc["out"].get<std::string>();
    } else {
        cfg.out = "results";
    }

    if (doc.contains("fast") && !doc["fast"].is_boolean())
        throw ConfigError("\"fast\" must be a boolean");
    cfg.fast = overrides.fast || doc.value("fast", false);

    if (doc.contains("data")) {
        if (!doc["data"].is_string()) throw ConfigError("\"data\" must be a string");
        cfg.data = doc["data"].get<std::string>();
    }

    cfg.fit = doc.value("fit", nlohmann::json::object());
    if (!cfg.fit.is_object()) throw ConfigError("\"fit\" must be an object");
    require_keys(cfg.fit,
                 {"components", "restarts", "tolerance", "variance_lo", "variance_hi",
                  "max_sweeps", "max_inner_iterations"},
                 "\"fit\"");

    cfg.mala = doc.value("mala", nlohmann::json::object());
    if (!cfg.mala.is_object()) throw ConfigError("\"mala\" must be an object");
    require_keys(cfg.mala,
                 {"dt", "burn_in", "thinning", "total_steps", "jump_probability",
                  "jump_coordinate", "jump_center"},
                 "\"mala\"");

    cfg.truth = doc.value("truth", nlohmann::json::object());
    if (!cfg.truth.is_object()) throw ConfigError("\"truth\" must be an object");
    require_keys(cfg.truth, {"xi", "sigma", "grid"}, "\"truth\"");

    // The output directory is where results land, not part of what was run,
    // so it stays outside the hashed document.
    cfg.effective = nlohmann::json{{"problem", cfg.problem},
                                   {"seed", cfg.seed},
                                   {"fast", cfg.fast},
                                   {"fit", cfg.fit},
                                   {"mala", cfg.mala},
                                   {"truth", cfg.truth}};
    if (!cfg.method.empty()) cfg.effective["method"] = cfg.method;
    if (!cfg.data.empty()) cfg.effective["data"] = cfg.data.generic_string();
    cfg.config_hash = fnv1a_hex(cfg.effective.dump());
    return cfg;
}

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.method.empty())
        throw ConfigError("run needs \"method\": \"vi\" or \"mala\"");
    const ProblemSetup p = assemble_problem(cfg);

    std::filesystem::create_directories(cfg.out);
    std::vector<std::filesystem::path> written;
    const auto emit = [&](const char* name, const std::string& text) {
        const std::filesystem::path path = cfg.out / name;
        write_text_file(path, text);
        written.push_back(path);
    };

    nlohmann::json summary = stamped_json(cfg);
    summary["method"] = cfg.method;
    summary["fast"] = cfg.fast;

    if (cfg.method == "vi") {
        const FitReport report = fit(*p.model, p.fit);
        if (!report.success)
            throw std::runtime_error("no restart produced a finite bound");

        nlohmann::json mix = stamped_json(cfg);
        mix["report"] = fit_report_to_json(report);
        emit("mixture.json", mix.dump(2) + "\n");
        emit("trace.csv", stamp_line(cfg) + fit_trace_csv(report));

        const MixtureMoments m = mixture_moments(report.state);
        nlohmann::json params = nlohmann::json::array();
        for (int j = 0; j < report.state.dim(); ++j)
            params.push_back({{"name", p.names[j]},
                              {"mean", m.mean[j]},
                              {"stddev", m.stddev[j]}});
        summary["parameters"] = std::move(params);
        summary["fit"] = {{"final_f2", report.final_f2},
                          {"converged", report.converged},
                          {"restart_index", report.restart_index},
                          {"sweeps", report.sweeps.size()},
                          {"forward_evaluations", report.forward_evaluations},
                          {"forward_evaluations_total", report.forward_evaluations_total}};
        if (p.catalysis) add_catalysis_extras(summary, &report.state, nullptr);
        emit("summary.json", summary.dump(2) + "\n");
        emit("marginals.csv", marginals_csv_from_state(cfg, p, report.state));
    } else {
        const Chain chain = mala_sample(*p.model, p.mala_start, p.mala);

        emit("chain.csv", stamp_line(cfg) + chain_csv(chain));

        nlohmann::json params = nlohmann::json::array();
        for (int j = 0; j < chain.samples.cols(); ++j)
            params.push_back({{"name", p.names[j]},
                              {"mean", chain.mean[j]},
                              {"stddev", chain.stddev[j]}});
        summary["parameters"] = std::move(params);
        summary["chain"] = {{"samples", chain.samples.rows()},
                            {"acceptance_rate", chain.acceptance_rate}};
        if (p.catalysis) add_catalysis_extras(summary, nullptr, &chain.samples);
        emit("summary.json", summary.dump(2) + "\n");
        emit("marginals.csv", marginals_csv_from_chain(cfg, p, chain.samples));
    }
    return written;
}

std::vector<std::filesystem::path> make_dataset(const ExperimentConfig& cfg) {
    if (cfg.problem != "diffusion-corners" && cfg.problem != "diffusion-midpoints")
        throw ConfigError(
            "make-data only applies to the diffusion problems; the catalysis "
            "concentration table ships with the repository");

    Eigen::Vector2d xi(0.09, 0.23);
    if (cfg.truth.contains("xi")) {
        const auto& raw = cfg.truth["xi"];
        if (!raw.is_array() || raw.size() != 2 || !raw[0].is_number() ||
            !raw[1].is_number())
            throw ConfigError("truth.xi must be an array of two numbers");
        xi << raw[0].get<double>(), raw[1].get<double>();
        if ((xi.array() < 0.0).any() || (xi.array() > 1.0).any())
            throw ConfigError("truth.xi must lie in the unit square");
    }
    const double sigma = get_number(cfg.truth, "sigma", 0.05);
    if (sigma < 0.0) throw ConfigError("truth.sigma must be nonnegative");

    DiffusionSettings settings;
    settings.grid =
        static_cast<int>(get_integer(cfg.truth, "grid", cfg.fast ? 55 : 110));
    if (settings.grid < 2) throw ConfigError("truth.grid must be at least 2");

    const SensorLayout layout = layout_of(cfg.problem);
    const Eigen::VectorXd y =
        make_synthetic_diffusion_data(layout, settings, xi, sigma, cfg.seed);

    std::filesystem::create_directories(cfg.out);
    const auto positions = sensor_positions(layout);
    const int sensors = static_cast<int>(positions.size());

    std::string csv = stamp_line(cfg) + "sensor,time,value\n";
    for (std::size_t k = 0; k < settings.measurement_times.size(); ++k)
        for (int s = 0; s < sensors; ++s)
            csv += std::to_string(s) + "," +
                   format_double(settings.measurement_times[k]) + "," +
                   format_double(y[static_cast<long>(k) * sensors + s]) + "\n";

    nlohmann::json prov = stamped_json(cfg);
    prov["xi_true"] = {xi[0], xi[1]};
    prov["sigma_star"] = sigma;
    prov["grid"] = settings.grid;
    prov["times"] = settings.measurement_times;
    nlohmann::json sensor_list = nlohmann::json::array();
    for (const auto& pos : positions) sensor_list.push_back({pos.x(), pos.y()});
    prov["sensors"] = std::move(sensor_list);

    const std::filesystem::path csv_path = cfg.out / "data.csv";
    const std::filesystem::path prov_path = cfg.out / "provenance.json";
    write_text_file(csv_path, csv);
    write_text_file(prov_path, prov.dump(2) + "\n");
    return {csv_path, prov_path};
}

}  // namespace gmvi
