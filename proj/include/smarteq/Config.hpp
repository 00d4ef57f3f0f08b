#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <smarteq/ChemicalSystem.hpp>

namespace smarteq {

struct ConfigEntry
{
    std::string key;
    std::string value;
    int line = 0;
};

/// One `[kind name]` block of a config file.
struct ConfigSection
{
    std::string kind;
    std::string name;
    std::vector<ConfigEntry> entries;
    int line = 0;

    auto find(std::string_view key) const -> const ConfigEntry*;
    auto text(std::string_view key) const -> std::optional<std::string>;
    auto requireText(std::string_view key) const -> std::string;
    auto number(std::string_view key, double fallback) const -> double;
    auto requireNumber(std::string_view key) const -> double;
    auto integer(std::string_view key, long fallback) const -> long;
    auto boolean(std::string_view key, bool fallback) const -> bool;

    /// Throws InputError naming the first key not in `allowed`.
    void allowKeys(std::initializer_list<std::string_view> allowed) const;

    auto label() const -> std::string;
};

/// Sectioned key-value configuration.
///
/// Grammar (one construct per line):
///
///     # comment            (also `;`)
///     [kind]               section without a name
///     [kind name]          named section; the name may contain spaces
///     key = value          entry; the value runs to the end of the line
///
/// Keys are unique within a section. Unnamed sections of one kind are unique.
class Config
{
public:
    static auto parse(std::string_view text, std::string source = "<string>") -> Config;
    static auto load(const std::string& path) -> Config;

    auto sections() const -> const std::vector<ConfigSection>& { return m_sections; }
    auto sectionsOf(std::string_view kind) const -> std::vector<const ConfigSection*>;
    auto section(std::string_view kind) const -> const ConfigSection*;
    auto section(std::string_view kind, std::string_view name) const -> const ConfigSection*;
    auto requireSection(std::string_view kind) const -> const ConfigSection&;
    auto requireSection(std::string_view kind, std::string_view name) const -> const ConfigSection&;

    /// Throws InputError for a section whose kind is not listed.
    void allowSections(std::initializer_list<std::string_view> kinds) const;

    auto source() const -> const std::string& { return m_source; }

private:
    std::vector<ConfigSection> m_sections;
    std::string m_source;
};

auto splitWords(std::string_view text) -> std::vector<std::string>;
auto parseNumber(std::string_view text) -> double;

/// "H:2 O:1" → {H: 2, O: 1}.
auto parseFormula(std::string_view text) -> Formula;

/// Durations such as "600", "10min", "1h", "2.5d"; returns seconds.
auto parseDuration(std::string_view text) -> double;

/// Build the chemical system from `[elements]`, `[phase …]` and `[species …]` sections.
auto loadSystem(const Config& config) -> ChemicalSystem;

} // namespace smarteq
