#include "divseq/cli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "divseq/error.hpp"
#include "divseq/serialize.hpp"

namespace divseq {

namespace {

struct ParamOpts {
  std::string p;
  std::string q;
  std::string domain = "pos";
  bool allow_unusual = false;

  void add(CLI::App* app) {
    app->add_option("--p", p, "multiplier p")->required();
    app->add_option("--q", q, "divisor q")->required();
    app->add_option("--domain", domain, "pos | nonzero")->capture_default_str();
    app->add_flag("--allow-unusual-params", allow_unusual, "admit p < 1");
  }

  SequenceParams get() const {
    SequenceParams s{parse_bigint(p), parse_bigint(q), parse_domain(domain), allow_unusual};
    s.validate();
    return s;
  }
};

struct BudgetOpts {
  std::uint64_t max_steps = Budget{}.max_steps;
  std::string max_magnitude = "10^36";

  void add(CLI::App* app) {
    app->add_option("--max-steps", max_steps, "step budget per orbit")->capture_default_str();
    app->add_option("--max-magnitude", max_magnitude, "largest |value| followed")->capture_default_str();
  }

  Budget get() const {
    Budget b;
    b.max_steps = max_steps;
    b.max_magnitude = parse_bigint(max_magnitude);
    b.validate();
    return b;
  }
};

struct HarvestOpts {
  std::string seed_bound = "10";
  std::uint64_t depth = 0;
  std::uint64_t prime_bound = 0;
  bool adaptive = false;

  void add(CLI::App* app, BudgetOpts& budget) {
    app->add_option("--seed-bound", seed_bound, "one-step relations for |c| <= N")->capture_default_str();
    app->add_option("--depth", depth, "also follow each seed's orbit this many steps")->capture_default_str();
    auto* pb = app->add_option("--prime-bound", prime_bound, "fixed basis of primes <= B");
    auto* ad = app->add_flag("--adaptive", adaptive, "grow the basis as needed (default)");
    pb->excludes(ad);
    ad->excludes(pb);
    budget.add(app);
  }

  HarvestConfig get(const BudgetOpts& budget) const {
    HarvestConfig c;
    c.seed_bound = parse_bigint(seed_bound);
    c.trajectory_depth = depth;
    c.budget = budget.get();
    if (prime_bound > 0) {
      c.policy = BasisPolicy::Fixed;
      c.prime_bound = prime_bound;
    }
    return c;
  }
};

std::pair<BigInt, BigInt> parse_range(const std::string& text, Domain domain) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw Error(ErrorKind::ParseError, "seed range must look like A..B, got '" + text + "'");
  BigInt a = parse_bigint(text.substr(0, dots));
  BigInt b = parse_bigint(text.substr(dots + 2));
  if (a > b) throw Error(ErrorKind::InvalidArgument, "empty seed range " + text);
  if (domain == Domain::Positive && a < 1) {
    throw Error(ErrorKind::InvalidArgument, "seed range " + text + " needs --domain nonzero for values below 1");
  }
  return {std::move(a), std::move(b)};
}

Json params_json(const SequenceParams& s) {
  return Json{{"p", big_json(s.p)}, {"q", big_json(s.q)}, {"domain", std::string(to_string(s.domain))}};
}

Json budget_json(const Budget& b) {
  return Json{{"max_steps", b.max_steps}, {"max_magnitude", big_json(b.max_magnitude)}};
}

Json harvest_json(const HarvestConfig& c) {
  Json j{{"seed_bound", big_json(c.seed_bound)},
         {"depth", c.trajectory_depth},
         {"policy", c.policy == BasisPolicy::Adaptive ? "adaptive" : "fixed"}};
  if (c.policy == BasisPolicy::Fixed) j["prime_bound"] = c.prime_bound;
  return j;
}

Json quotient_json(const QuotientReport& q) {
  Json factors = Json::array();
  std::size_t units = 0;
  for (const auto& f : q.invariant_factors) {
    if (f == 1) {
      ++units;
    } else {
      factors.push_back(big_json(f));
    }
  }
  return Json{{"ambient_rank", q.ambient_rank},
              {"free_rank", q.free_rank},
              {"torsion", factors},
              {"unit_factors", units},
              {"order", q.order ? big_json(*q.order) : Json(nullptr)},
              {"finite", q.finite()},
              {"trivial", q.trivial()}};
}

Json report(std::string_view command) {
  return Json{{"schema", std::string(kReportSchema)}, {"command", std::string(command)}};
}

Json path_json(const std::vector<BigInt>& path) {
  Json j = Json::array();
  for (const auto& v : path) j.push_back(big_json(v));
  return j;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SizeGuard: return kExitAborted;
    case ErrorKind::InvalidCertificate:
    case ErrorKind::CorruptCertificate:
    case ErrorKind::Internal: return kExitReplay;
    default: return kExitUsage;
  }
}

namespace {

void write_error(std::ostream& err, int code, std::string_view kind, const std::string& message) {
  err << Json{{"error", {{"kind", std::string(kind)}, {"message", message}, {"exit_code", code}}}}.dump(2) << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  out << text;
}

SequenceParams params_of(const GroupRef& g) {
  SequenceParams s{g.params.p, g.params.q, g.params.domain, true};
  s.validate();
  return s;
}

/// Builds a fact from --assert JSON. A Certified leaf without a certificate
/// is computed here: kernel members by harvesting, equivalences by orbit,
/// class bounds by census.
std::pair<Fact, std::string> fact_from_request(const Json& j) {
  if (j.contains("certificate") || j.value("status", "Hypothesis") != "Certified") {
    return {fact_from_json(j), "asserted"};
  }
  const Statement s = parse_statement(j.at("statement").get<std::string>());
  const SequenceParams params = params_of(s.a);
  Budget budget;
  if (j.contains("max_steps")) budget.max_steps = j.at("max_steps").get<std::uint64_t>();
  switch (s.kind) {
    case StatementKind::KernelMember: {
      HarvestConfig c;
      c.seed_bound = j.contains("seed_bound") ? big_from_json(j.at("seed_bound")) : BigInt(10);
      c.trajectory_depth = j.value("depth", std::uint64_t{0});
      c.budget = budget;
      const auto answer = kernel_member(s.n, harvest(params, c));
      if (!answer.yes()) {
        throw Error(ErrorKind::InvalidArgument, "no certificate for " + s.text() + ": " + answer.diagnostic);
      }
      return {kernel_fact(*answer.certificate),
              "harvest seed_bound=" + c.seed_bound.get_str() + " depth=" + std::to_string(c.trajectory_depth)};
    }
    case StatementKind::EquivalentToOne: {
      const auto o = orbit(s.n, params, budget);
      const auto one = std::find(o.path.begin(), o.path.end(), BigInt(1));
      if (one == o.path.end()) throw Error(ErrorKind::InvalidArgument, "orbit of " + s.n.get_str() + " does not reach 1");
      return {equivalent_to_one_fact(params, std::vector<BigInt>(o.path.begin(), one + 1)),
              "orbit max_steps=" + std::to_string(budget.max_steps)};
    }
    case StatementKind::ClassLowerBound: {
      const auto [from, to] = parse_range(j.at("seeds").get<std::string>(), params.domain);
      const auto lb = class_lower_bound(census(params, from, to, budget));
      if (lb.bound < s.n) throw Error(ErrorKind::InvalidArgument, "census found only " + std::to_string(lb.bound) + " cycles");
      std::vector<Cycle> witnesses(lb.witnesses.begin(), lb.witnesses.begin() + static_cast<long>(s.n.get_ui()));
      return {class_bound_fact(params, witnesses), "census seeds=" + j.at("seeds").get<std::string>()};
    }
    default:
      throw Error(ErrorKind::InvalidArgument, s.text() + " has no computable certificate; assert it as a Hypothesis");
  }
}

int cmd_orbit(const ParamOpts& po, const BudgetOpts& bo, const std::string& seed, std::ostream& out) {
  const SequenceParams params = po.get();
  const Budget budget = bo.get();
  const OrbitResult r = orbit(parse_bigint(seed), params, budget);
  Json j = report("orbit");
  j["params"] = params_json(params);
  j["budget"] = budget_json(budget);
  j["seed"] = big_json(r.seed);
  j["status"] = std::string(to_string(r.status));
  j["steps"] = r.steps;
  j["path"] = path_json(r.path);
  j["cycle"] = r.cycle ? cycle_json(*r.cycle) : Json(nullptr);
  if (r.status == OrbitStatus::MagnitudeExceeded || r.status == OrbitStatus::DomainViolation) {
    j["offending_value"] = big_json(r.offending_value);
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_census(const ParamOpts& po, const BudgetOpts& bo, const std::string& seeds, unsigned jobs,
               const std::string& format, std::ostream& out) {
  const SequenceParams params = po.get();
  const Budget budget = bo.get();
  const auto [from, to] = parse_range(seeds, params.domain);
  const ClassPartition part = census_parallel(params, from, to, budget, std::max(1u, jobs));
  if (format == "csv") {
    out << "seed,status,cycle_id,steps\n";
    for (const auto& s : part.seeds()) {
      out << s.seed.get_str() << "," << to_string(s.status) << "," << s.cycle_id << "," << s.steps << "\n";
    }
    return kExitOk;
  }
  const auto lb = class_lower_bound(part);
  const auto unresolved = part.unresolved();
  Json j = report("census");
  j["params"] = params_json(params);
  j["budget"] = budget_json(budget);
  j["seeds"] = Json{{"from", big_json(from)}, {"to", big_json(to)}, {"count", part.seeds().size()}};
  j["cycles"] = part.cycles().size();
  j["lower_bound"] = lb.bound;
  j["unresolved"] = unresolved.size();
  Json cycles = Json::array();
  for (const auto& c : lb.witnesses) cycles.push_back(cycle_json(c));
  j["cycle_list"] = cycles;
  Json open = Json::array();
  for (const auto& s : unresolved) {
    open.push_back(Json{{"seed", big_json(s.seed)}, {"status", std::string(to_string(s.status))}, {"steps", s.steps}});
  }
  j["unresolved_seeds"] = open;
  j["visited_values"] = part.visited().size();
  j["components"] = part.component_count();
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_present(const ParamOpts& po, const HarvestOpts& ho, const BudgetOpts& bo, const std::string& report_bound,
                std::ostream& out) {
  const SequenceParams params = po.get();
  const HarvestConfig config = ho.get(bo);
  const PresentationHandle h = harvest(params, config);
  std::optional<BigInt> bound;
  if (!report_bound.empty()) bound = parse_bigint(report_bound);
  const PresentationReport r = quotient_report(h, bound);
  for (std::size_t i = 0; i < h.relations().size(); ++i) {
    if (!h.replay_row(i)) throw Error(ErrorKind::InvalidCertificate, "relation row " + std::to_string(i) + " failed replay");
  }
  Json j = report("present");
  j["params"] = params_json(params);
  j["harvest"] = harvest_json(config);
  j["relations"] = r.relation_count;
  j["excluded"] = r.excluded_count;
  j["basis_size"] = h.basis().size();
  j["quotient"] = quotient_json(r.quotient);
  j["truncated"] = true;
  j["caveat"] = "quotient of the harvested lattice on the discovered basis; relations outside the scan may collapse it further";
  Json primes = Json::array();
  for (const auto& f : r.primes) primes.push_back(Json{{"prime", big_json(f.prime)}, {"certified", f.certified}});
  j["primes"] = primes;
  j["sign_certified"] = params.domain == Domain::Nonzero ? Json(r.sign_certified) : Json(nullptr);
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_kernel(const ParamOpts& po, const HarvestOpts& ho, const BudgetOpts& bo, const std::string& element,
               std::ostream& out) {
  const SequenceParams params = po.get();
  const HarvestConfig config = ho.get(bo);
  const BigInt x = parse_bigint(element);
  const KernelAnswer a = kernel_member(x, harvest(params, config));
  Json j = report("kernel");
  j["params"] = params_json(params);
  j["harvest"] = harvest_json(config);
  j["element"] = big_json(x);
  if (!a.yes()) {
    j["answer"] = "unknown";
    j["diagnostic"] = a.diagnostic;
  } else {
    const Json cert = kernel_certificate_json(*a.certificate);
    // Replay exactly what is printed.
    if (!replay(kernel_certificate_from_json(cert))) {
      throw Error(ErrorKind::InvalidCertificate, "emitted certificate does not replay");
    }
    j["answer"] = "yes";
    j["certificate"] = cert;
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_overline(const ParamOpts& po, const HarvestOpts& ho, const BudgetOpts& bo, const std::string& seeds,
                 bool allow_hypotheses, std::ostream& out) {
  const SequenceParams params = po.get();
  const HarvestConfig config = ho.get(bo);
  const auto [from, to] = parse_range(seeds, params.domain);
  const ClassPartition part = census(params, from, to, config.budget);
  const OverlineHandle h = build_overline(params, part, config, allow_hypotheses);
  Json j = report("overline");
  j["params"] = params_json(params);
  j["seeds"] = Json{{"from", big_json(from)}, {"to", big_json(to)}};
  j["one_cycle"] = cycle_json(h.one_cycle());
  j["certified_rows"] = h.certified_rows();
  j["hypothesis_rows"] = h.hypothesis_rows();
  j["conditional"] = h.conditional();
  j["excluded"] = h.excluded().size();
  j["quotient"] = quotient_json(h.quotient());
  j["truncated"] = true;
  Json witnesses = Json::array();
  for (const auto& [id, c] : h.witness_cycles()) witnesses.push_back(cycle_json(c));
  j["witness_cycles"] = witnesses;
  Json rows = Json::array();
  for (const auto& r : h.rows()) {
    Json row{{"value", big_json(r.value)}, {"status", std::string(to_string(r.status))}};
    switch (r.kind) {
      case OverlineRow::Kind::QIsOne: row["kind"] = "q"; break;
      case OverlineRow::Kind::SignSquared: row["kind"] = "sign"; break;
      case OverlineRow::Kind::NotEquivalentToOne:
        row["kind"] = "not_equivalent_to_one";
        if (!r.value_cycle.empty()) row["value_cycle"] = r.value_cycle;
        break;
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = rows;
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct DeduceOpts {
  std::string store;
  std::vector<std::string> asserts;
  std::vector<std::string> powers;
  bool apply = false;
  std::size_t max_rounds = ApplyOptions{}.max_rounds;
  std::vector<std::string> queries;
};

int cmd_deduce(const DeduceOpts& o, std::ostream& out) {
  FactStore store;
  {
    std::ifstream probe(o.store);
    if (probe.good()) store = import_store(read_file(o.store));
  }
  bool dirty = !std::ifstream(o.store).good();
  Json j = report("deduce");
  Json asserted = Json::array();
  for (const auto& text : o.asserts) {
    Json request;
    try {
      request = Json::parse(text);
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("--assert expects fact JSON: ") + e.what());
    }
    auto [fact, provenance] = fact_from_request(request);
    const std::size_t before = store.size();
    const std::string id = store.assert_fact(std::move(fact), provenance);
    dirty = true;
    asserted.push_back(Json{{"id", id}, {"statement", store.find(id)->statement.text()},
                            {"status", std::string(to_string(store.find(id)->status))}, {"new", store.size() > before}});
  }
  for (const auto& text : o.powers) {
    const auto caret = text.rfind('^');
    if (caret == std::string::npos) throw Error(ErrorKind::ParseError, "--power expects H(p,q;dom)^n");
    const GroupRef g = parse_group(text.substr(0, caret));
    const BigInt n = parse_bigint(text.substr(caret + 1));
    if (n < 2 || n > 64) throw Error(ErrorKind::InvalidArgument, "--power exponent must be in 2..64");
    const std::string id = request_power(store, g.params, static_cast<unsigned>(n.get_ui()));
    asserted.push_back(Json{{"id", id}, {"statement", store.find(id)->statement.text()}, {"status", "Certified"}});
    dirty = true;
  }
  j["asserted"] = asserted;
  if (o.apply) {
    ApplyOptions opts;
    opts.max_rounds = o.max_rounds;
    Json derived = Json::array();
    for (const auto& id : apply_rules(store, opts)) {
      const Fact* f = store.find(id);
      derived.push_back(Json{{"id", id},
                             {"statement", f->statement.text()},
                             {"status", std::string(to_string(f->status))},
                             {"rule", f->certificate.rule}});
    }
    j["derived"] = derived;
    dirty = dirty || !derived.empty();
  }
  if (!o.queries.empty()) {
    Json results = Json::object();
    for (const auto& pattern : o.queries) {
      Json matches = Json::array();
      for (const Fact* f : query(store, pattern)) {
        Json tree = derivation_tree_json(store, f->id);
        if (!tree.at("replays").get<bool>()) {
          throw Error(ErrorKind::InvalidCertificate, "derivation of " + f->statement.text() + " does not replay");
        }
        matches.push_back(std::move(tree));
      }
      results[pattern] = matches;
    }
    j["query"] = results;
  }
  j["store"] = Json{{"path", o.store}, {"facts", store.size()}};
  if (dirty) write_file(o.store, export_store(store));
  out << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Division sequences: orbits, class censuses, presentations and certified deductions", "divseq"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");
  std::string output;
  app.add_option("--output", output, "write the report to this file instead of standard output");

  ParamOpts po;
  BudgetOpts bo;
  HarvestOpts ho;
  std::string seed, seeds, element, format = "json", report_bound;
  unsigned jobs = 1;
  bool allow_hypotheses = false;
  DeduceOpts dopts;

  auto* orbit_cmd = app.add_subcommand("orbit", "iterate one seed");
  po.add(orbit_cmd);
  bo.add(orbit_cmd);
  orbit_cmd->add_option("--seed", seed, "starting value")->required();

  auto* census_cmd = app.add_subcommand("census", "resolve a range of seeds into cycles");
  po.add(census_cmd);
  bo.add(census_cmd);
  census_cmd->add_option("--seeds", seeds, "inclusive range A..B")->required();
  census_cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  census_cmd->add_option("--format", format, "json | csv (per-seed table)")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* present_cmd = app.add_subcommand("present", "harvest relations and report the truncated quotient");
  po.add(present_cmd);
  ho.add(present_cmd, bo);
  present_cmd->add_option("--report-bound", report_bound, "only report primes <= this bound");

  auto* kernel_cmd = app.add_subcommand("kernel", "certify an element as a kernel member");
  po.add(kernel_cmd);
  ho.add(kernel_cmd, bo);
  kernel_cmd->add_option("--element", element, "positive (or nonzero) integer")->required();

  auto* overline_cmd = app.add_subcommand("overline", "build the overline presentation from a census");
  po.add(overline_cmd);
  ho.add(overline_cmd, bo);
  overline_cmd->add_option("--seeds", seeds, "inclusive range A..B")->required();
  overline_cmd->add_flag("--allow-hypotheses", allow_hypotheses, "add rows for unresolved components");

  auto* deduce_cmd = app.add_subcommand("deduce", "assert, derive and query facts in a store");
  deduce_cmd->add_option("--store", dopts.store, "fact store file (created if missing)")->required();
  deduce_cmd->add_option("--assert", dopts.asserts, "fact JSON; repeatable");
  deduce_cmd->add_option("--power", dopts.powers, "request H(p,q;dom)^n; repeatable");
  deduce_cmd->add_flag("--apply", dopts.apply, "run the rules to a fixpoint");
  deduce_cmd->add_option("--max-rounds", dopts.max_rounds, "round limit for --apply")->capture_default_str();
  deduce_cmd->add_option("--query", dopts.queries, "statement pattern with ? wildcards, or #id; repeatable");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    write_error(err, kExitUsage, "Usage", e.what());
    return kExitUsage;
  }

  try {
    // Reports are buffered so a failed run never leaves partial output.
    std::ostringstream report;
    int code = kExitUsage;
    if (orbit_cmd->parsed()) code = cmd_orbit(po, bo, seed, report);
    if (census_cmd->parsed()) code = cmd_census(po, bo, seeds, jobs, format, report);
    if (present_cmd->parsed()) code = cmd_present(po, ho, bo, report_bound, report);
    if (kernel_cmd->parsed()) code = cmd_kernel(po, ho, bo, element, report);
    if (overline_cmd->parsed()) code = cmd_overline(po, ho, bo, seeds, allow_hypotheses, report);
    if (deduce_cmd->parsed()) code = cmd_deduce(dopts, report);
    if (output.empty()) {
      out << report.str();
    } else {
      write_file(output, report.str());
    }
    return code;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    write_error(err, code, to_string(e.kind()), e.what());
    return code;
  } catch (const Json::exception& e) {
    write_error(err, kExitUsage, "ParseError", e.what());
    return kExitUsage;
  }
}

}  // namespace divseq
