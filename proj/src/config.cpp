#include "gsocc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace gsocc {
namespace {

namespace pt = boost::property_tree;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string s = unquote(raw);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    config_error("key '" + key + "': expected a number, got '" + raw + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string s = unquote(raw);
  if (s == "true") return true;
  if (s == "false") return false;
  config_error("key '" + key + "': expected true or false, got '" + raw + "'");
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& raw) {
  const std::string s = unquote(raw);
  Int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    config_error("key '" + key + "': expected an integer, got '" + raw + "'");
  return v;
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
  bool hashed = true;
};

#define GSOCC_DOUBLE(sec, name, member)                                              \
  Field {                                                                            \
    sec, name, [](const PipelineConfig& c) { return format_double(c.member); },      \
        [](PipelineConfig& c, const std::string& v) { c.member = parse_double(name, v); } \
  }

#define GSOCC_INT(sec, name, member, type)                                             \
  Field {                                                                              \
    sec, name, [](const PipelineConfig& c) { return std::to_string(c.member); },       \
        [](PipelineConfig& c, const std::string& v) { c.member = parse_int<type>(name, v); } \
  }

#define GSOCC_BOOL(sec, name, member)                                                   \
  Field {                                                                              \
    sec, name, [](const PipelineConfig& c) { return std::string(c.member ? "true" : "false"); }, \
        [](PipelineConfig& c, const std::string& v) { c.member = parse_bool(name, v); } \
  }

#define GSOCC_ENUM(sec, name, member, parser)                                                \
  Field {                                                                                    \
    sec, name,                                                                               \
        [](const PipelineConfig& c) { return "\"" + std::string(to_string(c.member)) + "\""; }, \
        [](PipelineConfig& c, const std::string& v) { c.member = parser(unquote(v)); }       \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f = {
        GSOCC_DOUBLE("grm", "kappa_low", refinement.kappa_low),
        GSOCC_DOUBLE("grm", "kappa_high", refinement.kappa_high),
        GSOCC_DOUBLE("grm", "w_min", refinement.w_min),
        GSOCC_DOUBLE("grm", "w_max", refinement.w_max),
        GSOCC_DOUBLE("grm", "d_near", refinement.d_near),
        GSOCC_DOUBLE("grm", "d_far", refinement.d_far),
        GSOCC_INT("grm", "knn_k", refinement.knn_k, int),
        GSOCC_ENUM("grm", "knn_aggregate", refinement.knn_aggregate, parse_knn_aggregate),
        GSOCC_ENUM("grm", "fusion", refinement.fusion, parse_fusion),
        GSOCC_ENUM("grm", "curvature_orientation", refinement.orientation, parse_orientation),
        GSOCC_INT("sus", "mc_samples", refinement.mc_samples, int),
        GSOCC_DOUBLE("sus", "tau_unc", refinement.tau_unc),
        GSOCC_INT("sus", "num_classes", refinement.num_classes, int),
        GSOCC_ENUM("sus", "blend", blend, parse_blend),
        GSOCC_DOUBLE("memory", "init_interval", refinement.init_interval),
        GSOCC_DOUBLE("memory", "voxel_size", refinement.voxel_size),
        GSOCC_DOUBLE("memory", "init_opacity", init_opacity),
        GSOCC_DOUBLE("memory", "fixed_weight", fixed_weight),
        GSOCC_DOUBLE("proposal", "step", proposal.step),
        GSOCC_DOUBLE("proposal", "sigma_pos", proposal.sigma_pos),
        GSOCC_DOUBLE("proposal", "sigma_sem", proposal.sigma_sem),
        GSOCC_DOUBLE("proposal", "sem_target", proposal.sem_target),
        GSOCC_DOUBLE("proposal", "sem_step", proposal.sem_step),
        GSOCC_DOUBLE("proposal", "scale_step", proposal.scale_step),
        GSOCC_DOUBLE("proposal", "sigma_scale", proposal.sigma_scale),
        GSOCC_DOUBLE("proposal", "opacity_step", proposal.opacity_step),
        GSOCC_DOUBLE("proposal", "sigma_opacity", proposal.sigma_opacity),
        GSOCC_DOUBLE("proposal", "target_opacity", proposal.target_opacity),
        GSOCC_DOUBLE("proposal", "sigma_rot", proposal.sigma_rot),
        GSOCC_DOUBLE("proposal", "capture_radius", proposal.capture_radius),
        GSOCC_DOUBLE("splat", "occ_threshold", splat.occ_threshold),
        GSOCC_DOUBLE("splat", "cutoff_sigma", splat.cutoff_sigma),
        GSOCC_BOOL("splat", "certify", splat.certify),
        GSOCC_ENUM("run", "mode", mode, parse_mode),
        GSOCC_INT("run", "seed", seed, std::uint64_t),
        GSOCC_INT("run", "threads", threads, int),
    };
    f.back().hashed = false;
    return f;
  }();
  return table;
}

#undef GSOCC_DOUBLE
#undef GSOCC_INT
#undef GSOCC_ENUM
#undef GSOCC_BOOL

std::string dump(const PipelineConfig& cfg, bool hashed_only) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (hashed_only && !f.hashed) continue;
    if (section != f.section) {
      if (!section.empty()) os << "\n";
      section = f.section;
      os << "[" << section << "]\n";
    }
    os << f.key << " = " << f.get(cfg) << "\n";
  }
  return os.str();
}

}  // namespace

std::string_view to_string(UpdateMode m) {
  switch (m) {
    case UpdateMode::Sus: return "sus";
    case UpdateMode::FixedWeight: return "fixed";
    case UpdateMode::Unconstrained: return "unconstrained";
  }
  return "?";
}

std::string_view to_string(BlendReading b) {
  return b == BlendReading::State ? "state" : "residual";
}

UpdateMode parse_mode(std::string_view s) {
  if (s == "sus") return UpdateMode::Sus;
  if (s == "fixed") return UpdateMode::FixedWeight;
  if (s == "unconstrained") return UpdateMode::Unconstrained;
  config_error("unknown mode '" + std::string(s) + "' (sus|fixed|unconstrained)");
}

BlendReading parse_blend(std::string_view s) {
  if (s == "state") return BlendReading::State;
  if (s == "residual") return BlendReading::Residual;
  config_error("unknown blend '" + std::string(s) + "' (state|residual)");
}

void PipelineConfig::validate() const {
  refinement.validate();
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0)) config_error(std::string(name) + " must be >= 0");
  };
  non_negative(proposal.sigma_pos, "sigma_pos");
  non_negative(proposal.sigma_sem, "sigma_sem");
  non_negative(proposal.sigma_scale, "sigma_scale");
  non_negative(proposal.sigma_opacity, "sigma_opacity");
  non_negative(proposal.sigma_rot, "sigma_rot");
  non_negative(proposal.capture_radius, "capture_radius");
  if (!(proposal.target_opacity >= 0.0 && proposal.target_opacity <= 1.0))
    config_error("target_opacity must be in [0,1]");
  if (!(fixed_weight >= 0.0 && fixed_weight <= 1.0)) config_error("fixed_weight must be in [0,1]");
  if (!(init_opacity >= 0.0 && init_opacity <= 1.0)) config_error("init_opacity must be in [0,1]");
  if (!(splat.occ_threshold > 0.0)) config_error("occ_threshold must be > 0");
  if (!(splat.cutoff_sigma >= 3.0)) config_error("cutoff_sigma must be >= 3");
  if (threads < 0) config_error("threads must be >= 0");
}

PipelineConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(std::string("config syntax error: ") + e.message() + " (line " +
                 std::to_string(e.line()) + ")");
  }
  PipelineConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) config_error("key '" + section + "' must appear inside a [section]");
    for (const auto& [key, value] : body) {
      const Field* match = nullptr;
      for (const auto& f : fields()) {
        if (section == f.section && key == f.key) match = &f;
      }
      if (!match) config_error("unknown config key '" + section + "." + key + "'");
      match->set(cfg, value.data());
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_ini(const PipelineConfig& cfg) { return dump(cfg, false); }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t config_hash(const PipelineConfig& cfg) { return fnv1a64(dump(cfg, true)); }

}  // namespace gsocc
