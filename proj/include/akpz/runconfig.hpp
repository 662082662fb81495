#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace akpz {

// Parsed plain-text key/value config with [sections]. Unknown sections or
// keys are hard errors; there are no silent typos.
class ConfigFile {
  public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    std::vector<long> get_long_list(const std::string& section, const std::string& key,
                                    const std::vector<long>& fallback) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const;

    // Throws ConfigError if any present section/key pair is not in the schema.
    void validate(const std::map<std::string, std::vector<std::string>>& schema) const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

  private:
    std::string origin_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Exit codes: 0 pass, 1 criterion failure, 2 usage/config error, 3 numerical
// failure. Stable contract, also used by the in-process tests.
int cli_main(int argc, const char* const* argv);

}  // namespace akpz
