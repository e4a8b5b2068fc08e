#pragma once

// JSON forms shared by the fact store and the command-line reports. Integers
// of unbounded size are written as decimal strings.

#include "json.hpp"

#include "divseq/deduce.hpp"
#include "divseq/dynamics.hpp"
#include "divseq/presentation.hpp"

namespace divseq {

using Json = nlohmann::json;

Json big_json(const BigInt& v);
BigInt big_from_json(const Json& j);

Json cycle_json(const Cycle& c);
Cycle cycle_from_json(const Json& j);

Json kernel_certificate_json(const KernelCertificate& c);
KernelCertificate kernel_certificate_from_json(const Json& j);

Json fact_json(const Fact& f);
Fact fact_from_json(const Json& j);

/// The fact, its certificate and, recursively, its premises.
Json derivation_tree_json(const FactStore& store, const std::string& id);

}  // namespace divseq
