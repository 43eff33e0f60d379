#include "spider/json_reader.hpp"

#include <cmath>
#include <sstream>

#include "spider/error.hpp"

namespace spider {

namespace {

std::string fmt_range(double lo, double hi) {
    std::ostringstream os;
    os << "[" << lo << ", " << hi << "]";
    return os.str();
}

}  // namespace

JsonObject::JsonObject(const json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
    if (!j_.is_object()) throw ConfigError("expected an object", pointer_);
}

bool JsonObject::has(const std::string& key) const { return j_.contains(key); }

const json* JsonObject::find(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    return &*it;
}

const json& JsonObject::at(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError("missing required key '" + key + "'", pointer_);
    return *v;
}

double json_number(const json& v, const std::string& pointer, double lo, double hi) {
    if (!v.is_number()) throw ConfigError("expected a number", pointer);
    const double d = v.get<double>();
    if (!std::isfinite(d) || d < lo || d > hi) throw ConfigError("value out of range " + fmt_range(lo, hi), pointer);
    return d;
}

double JsonObject::number(const std::string& key, double lo, double hi) {
    return json_number(at(key), child(key), lo, hi);
}

double JsonObject::number_or(const std::string& key, double dflt, double lo, double hi) {
    const json* v = find(key);
    return v ? json_number(*v, child(key), lo, hi) : dflt;
}

std::int64_t JsonObject::integer(const std::string& key, std::int64_t lo, std::int64_t hi) {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError("expected an integer", child(key));
    const auto i = v.get<std::int64_t>();
    if (i < lo || i > hi)
        throw ConfigError("value out of range " + fmt_range(static_cast<double>(lo), static_cast<double>(hi)), child(key));
    return i;
}

std::int64_t JsonObject::integer_or(const std::string& key, std::int64_t dflt, std::int64_t lo, std::int64_t hi) {
    return has(key) ? integer(key, lo, hi) : dflt;
}

std::uint64_t JsonObject::unsigned_or(const std::string& key, std::uint64_t dflt) {
    const json* v = find(key);
    if (!v) return dflt;
    if (!v->is_number_unsigned()) throw ConfigError("expected an unsigned integer", child(key));
    return v->get<std::uint64_t>();
}

std::string JsonObject::string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError("expected a string", child(key));
    return v.get<std::string>();
}

std::string JsonObject::string_or(const std::string& key, const std::string& dflt) {
    return has(key) ? string(key) : dflt;
}

bool JsonObject::boolean_or(const std::string& key, bool dflt) {
    const json* v = find(key);
    if (!v) return dflt;
    if (!v->is_boolean()) throw ConfigError("expected true or false", child(key));
    return v->get<bool>();
}

std::vector<double> JsonObject::numbers(const std::string& key, double lo, double hi) {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError("expected an array of numbers", child(key));
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k)
        out.push_back(json_number(v[k], child(key) + "/" + std::to_string(k), lo, hi));
    return out;
}

JsonObject JsonObject::object(const std::string& key) { return JsonObject(at(key), child(key)); }

void JsonObject::finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
        if (!used_.count(it.key())) throw ConfigError("unknown key '" + it.key() + "'", child(it.key()));
}

}  // namespace spider
