#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "psum/error.hpp"
#include "psum/harness.hpp"
#include "psum/protocol.hpp"
#include "psum/rng.hpp"
#include "psum/watermark.hpp"

namespace psum::harness {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(Errc::config, "scenario: " + what); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end())
      bad("unknown key \"" + k + "\" in " + where);
  }
}

template <class T>
T get_or(const json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("wrong type for \"") + key + "\"");
  }
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    bad(std::string("\"") + key + "\" must be a non-negative integer");
  return v.get<std::uint64_t>();
}

ContentSpec parse_content(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) bad("\"content\" must be an object");
  check_keys(j, {"path", "synthetic", "seconds", "sample_rate", "channels", "tones", "max_freq", "noise", "frames",
                 "width", "height", "fps"},
             "content");
  ContentSpec c;
  if (j.contains("path")) {
    auto p = std::filesystem::path(get_or<std::string>(j, "path", ""));
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.path = p.string();
    return c;
  }
  c.synthetic = get_or<std::string>(j, "synthetic", "audio");
  if (c.synthetic == "audio") {
    c.audio.seconds = get_or<double>(j, "seconds", c.audio.seconds);
    c.audio.sample_rate = static_cast<unsigned>(get_u64(j, "sample_rate", c.audio.sample_rate));
    c.audio.channels = get_u64(j, "channels", c.audio.channels);
    c.audio.tones = get_u64(j, "tones", c.audio.tones);
    c.audio.max_freq = get_or<double>(j, "max_freq", c.audio.max_freq);
    c.audio.noise = get_or<double>(j, "noise", c.audio.noise);
  } else if (c.synthetic == "frames") {
    c.frames.frames = get_u64(j, "frames", c.frames.frames);
    c.frames.width = get_u64(j, "width", c.frames.width);
    c.frames.height = get_u64(j, "height", c.frames.height);
    c.frames.fps = get_or<double>(j, "fps", c.frames.fps);
    c.frames.noise = get_or<double>(j, "noise", c.frames.noise);
  } else {
    bad("content.synthetic must be \"audio\" or \"frames\"");
  }
  return c;
}

struct AttackEntry {
  std::string text;
  std::optional<double> min_nc;
};

// Attack strings may carry a declared check: {"attack": "awgn:30", "min_nc": 0.95}.
std::vector<AttackEntry> parse_attack_list(const json& j) {
  if (!j.is_array()) bad("\"attacks\" must be an array");
  std::vector<AttackEntry> out;
  for (const auto& a : j) {
    if (a.is_string()) {
      out.push_back({a.get<std::string>(), std::nullopt});
    } else if (a.is_object()) {
      check_keys(a, {"attack", "min_nc"}, "attacks[]");
      if (!a.contains("attack")) bad("attack entry without \"attack\"");
      AttackEntry e{get_or<std::string>(a, "attack", ""), std::nullopt};
      if (a.contains("min_nc")) e.min_nc = get_or<double>(a, "min_nc", 0.0);
      out.push_back(e);
    } else {
      bad("attack entries are strings or objects");
    }
  }
  return out;
}

std::string encode_attack(const AttackEntry& e) {
  if (!e.min_nc) return e.text;
  std::ostringstream s;
  s << e.text << "@" << *e.min_nc;
  return s.str();
}

AttackEntry decode_attack(const std::string& s) {
  const auto at = s.find('@');
  if (at == std::string::npos) return {s, std::nullopt};
  try {
    return {s.substr(0, at), std::stod(s.substr(at + 1))};
  } catch (const std::exception&) {
    bad("bad attack threshold in \"" + s + "\"");
  }
}

bool is_excluded_attack(const std::string& text) {
  const auto name = text.substr(0, text.find(':'));
  return name == "rotate" || name == "rotation" || name == "mp3" || name == "h264";
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

ScenarioConfig ScenarioConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) bad("top level must be an object");
  check_keys(j, {"seed", "N", "c", "epsilon", "n_proxies", "tau_ticks", "batch_size", "buyers", "content", "delta",
                 "levels", "attacks", "collusion", "theta", "bias"},
             "scenario");
  if (!j.contains("seed")) bad("missing \"seed\"");
  ScenarioConfig c;
  c.seed = get_u64(j, "seed", 0);
  c.N = static_cast<std::uint32_t>(get_u64(j, "N", c.N));
  c.c = static_cast<std::uint16_t>(get_u64(j, "c", c.c));
  c.epsilon = get_or<double>(j, "epsilon", c.epsilon);
  c.n_proxies = get_u64(j, "n_proxies", c.n_proxies);
  c.tau_ticks = get_u64(j, "tau_ticks", c.tau_ticks);
  c.batch_size = get_u64(j, "batch_size", c.batch_size);
  c.delta = get_or<double>(j, "delta", c.delta);
  c.levels = static_cast<int>(get_u64(j, "levels", static_cast<std::uint64_t>(c.levels)));
  c.theta = get_or<double>(j, "theta", c.theta);
  if (j.contains("bias")) {
    auto p = std::filesystem::path(get_or<std::string>(j, "bias", ""));
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.bias_file = p.string();
  }
  if (j.contains("content")) c.content = parse_content(j.at("content"), base_dir);

  if (j.contains("buyers")) {
    const auto& b = j.at("buyers");
    if (b.is_number_unsigned() || b.is_number_integer()) {
      const auto n = get_u64(j, "buyers", 0);
      for (std::uint64_t i = 0; i < n; ++i) c.buyers.push_back({"buyer-" + std::to_string(i), 0});
    } else if (b.is_array()) {
      for (const auto& e : b) {
        if (e.is_string()) {
          c.buyers.push_back({e.get<std::string>(), 0});
        } else if (e.is_object()) {
          check_keys(e, {"id", "start_tick"}, "buyers[]");
          if (!e.contains("id")) bad("buyer without \"id\"");
          c.buyers.push_back({get_or<std::string>(e, "id", ""), get_u64(e, "start_tick", 0)});
        } else {
          bad("buyer entries are strings or objects");
        }
      }
    } else {
      bad("\"buyers\" must be a count or an array");
    }
  } else {
    for (std::uint32_t i = 0; i < c.N; ++i) c.buyers.push_back({"buyer-" + std::to_string(i), 0});
  }

  if (j.contains("attacks"))
    for (const auto& a : parse_attack_list(j.at("attacks"))) c.attacks.push_back(encode_attack(a));

  if (j.contains("collusion")) {
    const auto& cj = j.at("collusion");
    if (!cj.is_object()) bad("\"collusion\" must be an object");
    check_keys(cj, {"kind", "members"}, "collusion");
    CollusionSpec cs;
    try {
      cs.kind = attacks::collusion_kind_from_string(get_or<std::string>(cj, "kind", "average"));
    } catch (const Error& e) {
      bad(e.what());
    }
    cs.members = get_or<std::vector<std::size_t>>(cj, "members", {});
    c.collusion = cs;
  }

  // Semantic checks.
  if (c.N < 1) bad("N must be >= 1");
  if (c.c < 1) bad("c must be >= 1");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) bad("epsilon must lie in (0, 1)");
  if (c.n_proxies < 1) bad("n_proxies must be >= 1");
  if (c.batch_size < 1) bad("batch_size must be >= 1");
  if (!(c.delta > 0.0)) bad("delta must be positive");
  if (c.levels < 1 || c.levels > 12) bad("levels must lie in [1, 12]");
  if (!(c.theta > 0.0 && c.theta <= 1.0)) bad("theta must lie in (0, 1]");
  if (c.buyers.size() > c.N) bad("more buyers than codewords");
  std::set<std::string> ids;
  for (const auto& b : c.buyers) {
    if (b.id.empty()) bad("empty buyer id");
    if (!ids.insert(b.id).second) bad("duplicate buyer id " + b.id);
  }
  if (c.collusion) {
    if (c.collusion->members.size() < 2) bad("collusion needs at least two members");
    for (auto m : c.collusion->members)
      if (m >= c.buyers.size()) bad("collusion member out of range");
  }
  for (const auto& a : c.attacks) {
    const auto e = decode_attack(a);
    if (!is_excluded_attack(e.text)) (void)attacks::AttackSpec::parse(e.text);
  }
  return c;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config, "scenario: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  return from_json(j, path.parent_path());
}

bool ScenarioReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

bool deterministic_from_env() {
  const char* v = std::getenv("PSUM_DETERMINISTIC");
  return v && std::string(v) == "1";
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = opts.seed.value_or(cfg.seed);
  auto log = [&](const std::string& s) {
    if (opts.verbose) std::cerr << "[psum] " << s << "\n";
  };

  const auto attack_list = opts.attacks ? *opts.attacks : cfg.attacks;
  for (const auto& a : attack_list) {
    const auto e = decode_attack(a);
    if (!is_excluded_attack(e.text)) (void)attacks::AttackSpec::parse(e.text);
  }

  ScenarioReport rep;
  auto check = [&](const std::string& name, bool ok, const std::string& detail = {}) {
    rep.checks.push_back({name, ok, detail});
  };

  // Code.
  codes::CodeParams cp;
  cp.num_users = cfg.N;
  cp.coalition_bound = cfg.c;
  cp.error_prob = cfg.epsilon;
  cp.seed = derive_seed(seed, 1);
  const auto bias = cfg.bias_file ? codes::BiasDistribution::load(*cfg.bias_file)
                                  : codes::BiasDistribution::tardos_default(cfg.c);
  auto book = codes::generate_code(cp, bias);
  log("code: N=" + std::to_string(cfg.N) + " m=" + std::to_string(book.length()));

  // Content and partition.
  transform::Content content;
  if (cfg.content.path)
    content = load_content(*cfg.content.path);
  else if (cfg.content.synthetic == "frames")
    content = synthetic_frames(derive_seed(seed, 2), cfg.content.frames);
  else
    content = synthetic_audio(derive_seed(seed, 2), cfg.content.audio);
  transform::PartitionOptions po;
  po.levels = cfg.levels;
  po.delta = cfg.delta;
  po.code_length = book.length();
  auto part = transform::make_base_file(content, po);
  const transform::BaseFile base = part.base;
  log("partition: " + std::to_string(base.variant0.size()) + " approximation coefficients");

  // Protocol.
  protocol::SystemConfig sc;
  sc.seed = derive_seed(seed, 3);
  sc.n_proxies = cfg.n_proxies;
  sc.tau_ticks = cfg.tau_ticks;
  sc.batch_size = cfg.batch_size;
  sc.theta = cfg.theta;
  sc.trace_policy.seed = derive_seed(seed, 4);
  protocol::Simulation sim(sc, book, std::move(part));
  for (const auto& b : cfg.buyers) {
    protocol::BuyerSpec bs;
    bs.real_id = b.id;
    bs.start_tick = b.start_tick;
    sim.add_buyer(bs);
  }
  const auto results = sim.run();
  log("protocol: " + std::to_string(results.size()) + " purchases finished");

  const double peak = content_peak(content);
  const double bound = watermark::psnr_bound(peak, cfg.delta);
  json buyers = json::array();
  std::vector<transform::Content> copies(results.size());
  bool all_done = results.size() == cfg.buyers.size();
  bool all_ber0 = true, all_oracle = true, all_psnr = true;
  double min_psnr = watermark::kInfinitePsnr;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    json bj{{"id", r.real_id}, {"address", r.address}, {"tid", r.tid}, {"completed", r.completed},
            {"aborted", r.aborted}, {"degraded_privacy", r.degraded_privacy}};
    if (r.pseudonym) bj["pseudonym"] = r.pseudonym->hex();
    if (r.aborted) bj["abort"] = {{"step", r.abort_step}, {"reason", r.abort_reason}};
    const bool ok = r.completed && !r.aborted && r.row && r.content && r.supplementary_verified;
    if (!ok) {
      all_done = false;
      buyers.push_back(bj);
      continue;
    }
    bj["row"] = *r.row;
    const auto f = book.codeword(*r.row);
    const auto oracle = oracle_embed_approx(content, f, cfg.delta, cfg.levels);
    double diff = oracle.size() == r.approx.size() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < std::min(oracle.size(), r.approx.size()); ++k)
      diff = std::max(diff, std::abs(oracle[k] - r.approx[k]));
    all_oracle = all_oracle && diff == 0.0;
    copies[i] = *r.content;
    const auto bits = extract_bits(copies[i], base);
    const double b = watermark::ber(f, bits), n = watermark::nc(f, bits);
    const double p = content_psnr(content, copies[i]);
    all_ber0 = all_ber0 && b == 0.0;
    all_psnr = all_psnr && p >= bound;
    min_psnr = std::min(min_psnr, p);
    bj["ber"] = b;
    bj["nc"] = n;
    bj["psnr"] = number_or_null(p);
    bj["oracle_max_abs_diff"] = number_or_null(diff);
    buyers.push_back(bj);
    rep.metrics.push_back({r.real_id, "none", b, n, p});
  }
  check("purchases_completed", all_done, std::to_string(results.size()) + " of " + std::to_string(cfg.buyers.size()));
  check("clean_ber_zero", all_ber0 && all_done);
  check("protocol_matches_oracle", all_oracle && all_done);
  check("psnr_within_bound", all_psnr && all_done);

  // Signal attacks.
  json attack_json = json::array();
  json not_run = json::array();
  not_run.push_back({{"attack", "rotate"}, {"reason", "frame rotation is not modelled"}});
  not_run.push_back({{"attack", "mp3"}, {"reason", "external codec; requantize and lowpass stand in"}});
  not_run.push_back({{"attack", "h264"}, {"reason", "external codec; requantize and lowpass stand in"}});
  std::uint64_t attack_index = 0;
  for (const auto& entry : attack_list) {
    const auto ae = decode_attack(entry);
    if (is_excluded_attack(ae.text)) continue;  // already listed as not-run
    auto spec = attacks::AttackSpec::parse(ae.text);
    spec.seed = derive_seed(seed, 100 + attack_index++);
    const bool gain = spec.kind == attacks::AttackSpec::Kind::scale;
    double worst_nc = 1.0;
    bool ran = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].row || !results[i].content) continue;
      const auto f = book.codeword(*results[i].row);
      transform::Content attacked;
      try {
        attacked = attacks::apply_signal_attack(copies[i], spec);
      } catch (const Error& e) {
        not_run.push_back({{"attack", spec.name()}, {"reason", e.what()}});
        break;
      }
      const auto bits = extract_bits(attacked, base, gain);
      const double b = watermark::ber(f, bits), n = watermark::nc(f, bits);
      const double p = content_psnr(content, attacked);
      worst_nc = std::min(worst_nc, n);
      ran = true;
      rep.metrics.push_back({results[i].real_id, spec.name(), b, n, p});
      attack_json.push_back({{"attack", spec.name()}, {"buyer", results[i].real_id}, {"ber", b}, {"nc", n},
                             {"psnr", number_or_null(p)}, {"gain_normalized", gain}});
    }
    if (ae.min_nc) {
      std::ostringstream d;
      d << "worst NC " << worst_nc << ", required " << *ae.min_nc;
      check("robust:" + spec.name(), ran && worst_nc >= *ae.min_nc, d.str());
    }
    log("attack " + spec.name() + " done");
  }

  // Tracing.
  json tracing = json::object();
  std::vector<std::size_t> guilty;  // buyer indices expected in the accusation
  transform::Content pirated;
  bool can_trace = false;
  if (cfg.collusion) {
    std::vector<transform::Content> members;
    for (auto m : cfg.collusion->members)
      if (m < results.size() && results[m].content) members.push_back(copies[m]);
    if (members.size() == cfg.collusion->members.size()) {
      pirated = attacks::collude_contents(members, cfg.collusion->kind);
      guilty = cfg.collusion->members;
      can_trace = true;
      tracing["collusion"] = attacks::to_string(cfg.collusion->kind);
    }
  } else if (!results.empty() && results[0].content) {
    pirated = copies[0];
    guilty = {0};
    can_trace = true;
    tracing["collusion"] = "none";
  }
  if (can_trace) {
    const auto out = sim.trace_traitor(pirated);
    std::set<std::size_t> accused;
    for (const auto& p : out.accused)
      for (std::size_t i = 0; i < results.size(); ++i)
        if (results[i].pseudonym && *results[i].pseudonym == p) accused.insert(i);
    json acc = json::array(), truth = json::array();
    for (auto i : accused) acc.push_back(results[i].real_id);
    for (auto i : guilty) truth.push_back(results[i].real_id);
    tracing["accused"] = acc;
    tracing["colluders"] = truth;
    tracing["threshold"] = out.threshold;
    const std::set<std::size_t> gset(guilty.begin(), guilty.end());
    bool hit = false, innocent = false;
    for (auto i : accused) (gset.count(i) ? hit : innocent) = true;
    check("trace_accuses_colluder", hit);
    check("trace_no_innocent", !innocent);

    // Arbitration: every accused buyer, plus one buyer nobody accused.
    json verdicts = json::array();
    bool guilty_ok = true, innocent_ok = true;
    for (auto i : accused) {
      const auto v = sim.arbitrate(sim.make_claim(results[i].tid, out.pc));
      verdicts.push_back({{"tid", results[i].tid}, {"verdict", protocol::to_string(v.kind)}, {"nc", v.nc},
                          {"real_id", v.real_id}});
      if (gset.count(i))
        guilty_ok = guilty_ok && v.kind == protocol::Verdict::Kind::guilty && v.real_id == results[i].real_id;
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (gset.count(i) || accused.count(i) || results[i].tid.empty()) continue;
      const auto v = sim.arbitrate(sim.make_claim(results[i].tid, out.pc));
      verdicts.push_back({{"tid", results[i].tid}, {"verdict", protocol::to_string(v.kind)}, {"nc", v.nc}});
      innocent_ok = v.kind == protocol::Verdict::Kind::innocent;
      break;
    }
    tracing["arbitration"] = verdicts;
    check("arbitration_guilty", guilty_ok && hit);
    check("arbitration_innocent", innocent_ok);
  }

  // Transcript properties.
  const auto& net = sim.network();
  json tprops = json::array();
  auto tcheck = [&](const std::string& name, bool ok) {
    tprops.push_back({{"property", name}, {"passed", ok}});
    check("transcript:" + name, ok);
  };
  tcheck("merchant_without_fingerprint_bits",
         !protocol::contains_class(net.transcript("merchant"), protocol::PayloadClass::fingerprint_bits));
  bool proxies_clean = true;
  for (const auto& p : sim.proxy_ids())
    proxies_clean = proxies_clean &&
                    !protocol::contains_class(net.transcript(p), protocol::PayloadClass::clear_coefficients);
  tcheck("proxies_without_clear_coefficients", proxies_clean);
  tcheck("monitor_without_clear_coefficients",
         !protocol::contains_class(net.transcript("monitor"), protocol::PayloadClass::clear_coefficients));
  bool relays_clean = true;
  for (const auto& r : sim.relay_ids())
    relays_clean = relays_clean &&
                   !protocol::contains_class(net.transcript(r), protocol::PayloadClass::clear_coefficients) &&
                   !protocol::contains_class(net.transcript(r), protocol::PayloadClass::fingerprint_bits);
  tcheck("relays_see_ciphertext_only", relays_clean);

  std::ostringstream jl;
  protocol::write_jsonl(jl, net);
  rep.transcripts_jsonl = jl.str();

  json metrics = json::array();
  for (const auto& m : rep.metrics)
    metrics.push_back({{"buyer", m.buyer}, {"attack", m.attack}, {"ber", m.ber}, {"nc", m.nc},
                       {"psnr", number_or_null(m.psnr)}});
  json checks = json::array();
  for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});

  rep.json = {{"schema", "psum-report/1"},
              {"seed", seed},
              {"config",
               {{"N", cfg.N},
                {"c", cfg.c},
                {"epsilon", cfg.epsilon},
                {"code_length", book.length()},
                {"n_proxies", cfg.n_proxies},
                {"tau_ticks", cfg.tau_ticks},
                {"batch_size", cfg.batch_size},
                {"delta", cfg.delta},
                {"levels", cfg.levels},
                {"theta", cfg.theta},
                {"content", cfg.content.path ? *cfg.content.path : "synthetic:" + cfg.content.synthetic}}},
              {"buyers", buyers},
              {"distortion", {{"psnr_bound", bound}, {"min_psnr", number_or_null(min_psnr)}}},
              {"attacks", attack_json},
              {"not_run", not_run},
              {"tracing", tracing},
              {"transcript_properties", tprops},
              {"metrics", metrics},
              {"checks", checks},
              {"passed", rep.all_passed()}};
  if (!opts.deterministic) {
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rep.json["timing"] = {{"wall_ms", ms}};
  }
  return rep;
}

}  // namespace psum::harness
