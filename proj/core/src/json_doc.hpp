#pragma once

// Internal JSON document helpers shared by the serialization layer and the
// experiment driver.  Not installed; public headers stay JSON-free.

#include <string>
#include <vector>

#include "harmlab/error.hpp"
#include "harmlab/target.hpp"
#include "json.hpp"

namespace harmlab::detail {

using nlohmann::json;

json readDocument(const std::string& path);
void writeText(const std::string& path, const std::string& body);
void writeDocument(const json& doc, const std::string& path);

// Documents are closed schemas: an unrecognized key is a hard error, so a
// misspelled field cannot silently fall back to a default.
void checkKeys(const json& doc, const std::vector<std::string>& allowed,
               const std::string& context);

const json& field(const json& doc, const std::string& key,
                  const std::string& context);
double numberField(const json& doc, const std::string& key,
                   const std::string& context);
int intField(const json& doc, const std::string& key,
             const std::string& context);
void checkVersion(const json& doc, const std::string& context);

json pointRecord(const TargetPoint& p);
TargetPoint parsePoint(const json& rec, const std::string& context);
json targetRecord(const NpcTarget& target);
NpcTarget parseTarget(const json& doc, const std::string& context);

}  // namespace harmlab::detail
