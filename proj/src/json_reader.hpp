#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpsim/errors.hpp"

namespace qpsim::detail {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so leftovers can
// be reported as unknown. Problems go into a shared list keyed by path.
class JsonReader {
public:
    JsonReader(const json& j, std::string path, std::vector<std::string>& problems)
        : j_(j), path_(std::move(path)), problems_(problems) {
        if (!j_.is_object()) problems_.push_back(path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    template <class T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!has(key)) return;
        convert(key, out);
    }

    template <class T>
    void require(const std::string& key, T& out) {
        seen_.insert(key);
        if (!has(key)) {
            problems_.push_back(sub(key) + ": required key missing");
            return;
        }
        convert(key, out);
    }

    template <class T>
    void read(const std::string& key, std::optional<T>& out) {
        seen_.insert(key);
        if (!has(key) || j_.at(key).is_null()) return;
        T v{};
        convert(key, v);
        out = v;
    }

    JsonReader child(const std::string& key) {
        seen_.insert(key);
        return JsonReader(has(key) ? j_.at(key) : empty(), sub(key), problems_);
    }

    const json* raw(const std::string& key) {
        seen_.insert(key);
        return has(key) ? &j_.at(key) : nullptr;
    }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const std::string& path() const { return path_; }
    std::vector<std::string>& problems() { return problems_; }

    void finish() {
        if (!j_.is_object()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) problems_.push_back(sub(it.key()) + ": unknown key");
    }

private:
    static const json& empty() {
        static const json e = json::object();
        return e;
    }

    template <class T>
    void convert(const std::string& key, T& out) {
        const json& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::runtime_error("expected boolean");
            } else if constexpr (std::is_arithmetic_v<T>) {
                if (!v.is_number()) throw std::runtime_error("expected number");
                if constexpr (std::is_integral_v<T>) {
                    if (!v.is_number_integer()) throw std::runtime_error("expected integer");
                    if constexpr (std::is_unsigned_v<T>)
                        if (v.get<long long>() < 0) throw std::runtime_error("expected non-negative integer");
                }
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw std::runtime_error("expected string");
            }
            out = v.get<T>();
        } catch (const std::exception& e) {
            problems_.push_back(sub(key) + ": " + e.what());
        }
    }

    const json& j_;
    std::string path_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

inline void throw_if_problems(const std::vector<std::string>& problems) {
    if (!problems.empty()) throw ValidationError(problems);
}

}  // namespace qpsim::detail
