#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace spider {

using json = nlohmann::json;

// Strict view of a JSON object: tracks consumed keys and rejects the rest.
class JsonObject {
public:
    JsonObject(const json& j, std::string pointer);

    const std::string& pointer() const { return pointer_; }
    std::string child(const std::string& key) const { return pointer_ + "/" + key; }

    bool has(const std::string& key) const;
    const json& at(const std::string& key);  // required
    const json* find(const std::string& key);

    double number(const std::string& key, double lo = -std::numeric_limits<double>::infinity(),
                  double hi = std::numeric_limits<double>::infinity());
    double number_or(const std::string& key, double dflt, double lo = -std::numeric_limits<double>::infinity(),
                     double hi = std::numeric_limits<double>::infinity());
    std::int64_t integer(const std::string& key, std::int64_t lo, std::int64_t hi);
    std::int64_t integer_or(const std::string& key, std::int64_t dflt, std::int64_t lo, std::int64_t hi);
    std::uint64_t unsigned_or(const std::string& key, std::uint64_t dflt);
    std::string string(const std::string& key);
    std::string string_or(const std::string& key, const std::string& dflt);
    bool boolean_or(const std::string& key, bool dflt);
    std::vector<double> numbers(const std::string& key, double lo = -std::numeric_limits<double>::infinity(),
                                double hi = std::numeric_limits<double>::infinity());
    JsonObject object(const std::string& key);

    // Throws ConfigError for the first key that was never read.
    void finish() const;

private:
    const json& j_;
    std::string pointer_;
    mutable std::set<std::string> used_;
};

double json_number(const json& v, const std::string& pointer, double lo, double hi);

}  // namespace spider
