#include <set>

#include "divseq/error.hpp"
#include "divseq/serialize.hpp"

namespace divseq {

namespace {

[[noreturn]] void corrupt(const std::string& why) { throw Error(ErrorKind::CorruptCertificate, why); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::ParseError, std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

Json big_json(const BigInt& v) { return v.get_str(); }

BigInt big_from_json(const Json& j) {
  if (j.is_string()) return parse_bigint(j.get<std::string>());
  if (j.is_number_integer()) return BigInt(std::to_string(j.get<long long>()));
  throw Error(ErrorKind::ParseError, "expected an integer, got " + j.dump());
}

Json cycle_json(const Cycle& c) {
  Json members = Json::array();
  for (const auto& m : c.members) members.push_back(big_json(m));
  return Json{{"id", c.id}, {"members", members}};
}

Cycle cycle_from_json(const Json& j) {
  std::vector<BigInt> members;
  for (const auto& m : field(j, "members")) members.push_back(big_from_json(m));
  Cycle c = Cycle::from_members(members);
  if (c.members != members || (j.contains("id") && j.at("id").get<std::string>() != c.id)) {
    corrupt("cycle witness is not in canonical form");
  }
  return c;
}

Json kernel_certificate_json(const KernelCertificate& c) {
  Json terms = Json::array();
  for (const auto& t : c.terms) {
    Json term{{"relation", std::string(to_string(t.relation.kind))}, {"coefficient", big_json(t.coefficient)}};
    if (t.relation.kind == RelationProvenance::Kind::OrbitStep) {
      term["c"] = big_json(t.relation.c);
      term["relation_text"] = c.params.p.get_str() + "*" + t.relation.c.get_str() + "+1=" +
                              BigInt(c.params.p * t.relation.c + 1).get_str();
    }
    terms.push_back(std::move(term));
  }
  return Json{{"p", big_json(c.params.p)},
              {"q", big_json(c.params.q)},
              {"domain", std::string(to_string(c.params.domain))},
              {"element", big_json(c.element)},
              {"terms", terms}};
}

KernelCertificate kernel_certificate_from_json(const Json& j) {
  KernelCertificate c;
  c.params.p = big_from_json(field(j, "p"));
  c.params.q = big_from_json(field(j, "q"));
  c.params.domain = parse_domain(field(j, "domain").get<std::string>());
  c.params.allow_unusual = true;
  c.element = big_from_json(field(j, "element"));
  for (const auto& t : field(j, "terms")) {
    KernelTerm term;
    term.relation.kind = parse_relation_kind(field(t, "relation").get<std::string>());
    if (term.relation.kind == RelationProvenance::Kind::OrbitStep) term.relation.c = big_from_json(field(t, "c"));
    term.coefficient = big_from_json(field(t, "coefficient"));
    c.terms.push_back(std::move(term));
  }
  return c;
}

Json fact_json(const Fact& f) {
  Json cert{{"rule", f.certificate.rule}, {"premises", f.certificate.premises}};
  if (f.certificate.kernel) cert["kernel"] = kernel_certificate_json(*f.certificate.kernel);
  if (!f.certificate.cycles.empty()) {
    Json cycles = Json::array();
    for (const auto& c : f.certificate.cycles) cycles.push_back(cycle_json(c));
    cert["cycles"] = cycles;
  }
  if (!f.certificate.path.empty()) {
    Json path = Json::array();
    for (const auto& v : f.certificate.path) path.push_back(big_json(v));
    cert["path"] = path;
  }
  return Json{{"id", f.id},
              {"statement", f.statement.text()},
              {"status", std::string(to_string(f.status))},
              {"certificate", cert}};
}

Fact fact_from_json(const Json& j) {
  Fact f;
  f.statement = parse_statement(field(j, "statement").get<std::string>());
  f.id = j.contains("id") ? j.at("id").get<std::string>() : fact_id(f.statement);
  f.status = parse_status(field(j, "status").get<std::string>());
  if (j.contains("certificate")) {
    const Json& c = j.at("certificate");
    f.certificate.rule = field(c, "rule").get<std::string>();
    if (c.contains("premises")) f.certificate.premises = c.at("premises").get<std::vector<std::string>>();
    if (c.contains("kernel")) f.certificate.kernel = kernel_certificate_from_json(c.at("kernel"));
    if (c.contains("cycles")) {
      for (const auto& cy : c.at("cycles")) f.certificate.cycles.push_back(cycle_from_json(cy));
    }
    if (c.contains("path")) {
      for (const auto& v : c.at("path")) f.certificate.path.push_back(big_from_json(v));
    }
  } else if (f.status == FactStatus::Hypothesis) {
    f.certificate.rule = "hypothesis";
  }
  return f;
}

Json derivation_tree_json(const FactStore& store, const std::string& id) {
  const Fact* f = store.find(id);
  if (f == nullptr) return Json{{"id", id}, {"missing", true}};
  Json node = fact_json(*f);
  Json premises = Json::array();
  for (const auto& p : f->certificate.premises) premises.push_back(derivation_tree_json(store, p));
  node["derivation"] = premises;
  node["replays"] = store.verify(id);
  return node;
}

std::string export_store(const FactStore& store) {
  std::vector<const Fact*> facts = store.facts();
  std::sort(facts.begin(), facts.end(), [](const Fact* a, const Fact* b) { return a->id < b->id; });
  Json list = Json::array();
  for (const Fact* f : facts) list.push_back(fact_json(*f));
  Json doc{{"schema", std::string(kFactSchema)},
           {"facts", list},
           {"log", store.log()},
           {"provenance", store.provenance()}};
  return doc.dump(2) + "\n";
}

FactStore import_store(const std::string& document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("fact store is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("schema") || doc.at("schema") != kFactSchema) {
    throw Error(ErrorKind::SchemaVersionMismatch,
                "expected schema " + std::string(kFactSchema) +
                    (doc.is_object() && doc.contains("schema") ? ", got " + doc.at("schema").dump() : ""));
  }
  FactStore store;
  std::map<std::string, Fact> by_id;
  try {
    for (const auto& j : field(doc, "facts")) {
      Fact f = fact_from_json(j);
      if (f.id != fact_id(f.statement)) corrupt("fact id does not match its statement: " + f.id);
      const std::string id = f.id;
      if (!by_id.emplace(id, std::move(f)).second) corrupt("duplicate fact " + id);
    }
    std::vector<std::string> log = doc.contains("log") ? doc.at("log").get<std::vector<std::string>>()
                                                       : std::vector<std::string>{};
    if (!doc.contains("log")) {
      for (const auto& [id, f] : by_id) log.push_back(id);
    }
    if (std::set<std::string>(log.begin(), log.end()).size() != log.size() || log.size() != by_id.size()) {
      corrupt("insertion log does not list every fact exactly once");
    }
    for (const auto& id : log) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) corrupt("insertion log names unknown fact " + id);
      store.commit(std::move(it->second));
    }
    if (doc.contains("provenance")) {
      for (const auto& [id, text] : doc.at("provenance").items()) {
        if (store.find(id) == nullptr) corrupt("provenance for unknown fact " + id);
        store.provenance_[id] = text.get<std::string>();
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed fact store: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CorruptCertificate) throw;
    throw Error(ErrorKind::CorruptCertificate, std::string("unreadable fact: ") + e.what());
  }
  for (const auto& id : store.log()) {
    if (!store.verify(id)) corrupt("certificate of fact " + id + " (" + store.find(id)->statement.text() + ") does not replay");
  }
  return store;
}

}  // namespace divseq
