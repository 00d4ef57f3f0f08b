#include <smarteq/Config.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace smarteq {
namespace {

auto trim(std::string_view s) -> std::string_view
{
    while(!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while(!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

} // namespace

auto splitWords(std::string_view text) -> std::vector<std::string>
{
    std::vector<std::string> words;
    std::string current;
    for(char c : text)
    {
        if(std::isspace(static_cast<unsigned char>(c)) || c == ',')
        {
            if(!current.empty()) words.push_back(std::move(current));
            current.clear();
        }
        else
            current += c;
    }
    if(!current.empty()) words.push_back(std::move(current));
    return words;
}

auto parseNumber(std::string_view text) -> double
{
    auto t = trim(text);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if(ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw InputError("not a number: '" + std::string(text) + "'");
    return value;
}

auto parseFormula(std::string_view text) -> Formula
{
    Formula formula;
    for(const auto& word : splitWords(text))
    {
        auto colon = word.rfind(':');
        if(colon == std::string::npos || colon == 0)
            throw InputError("formula term '" + word + "' is not of the form Element:coefficient");
        auto element = word.substr(0, colon);
        auto coeff = parseNumber(std::string_view(word).substr(colon + 1));
        if(!formula.emplace(element, coeff).second)
            throw InputError("element '" + element + "' repeated in formula '" + std::string(text) + "'");
    }
    return formula;
}

auto parseDuration(std::string_view text) -> double
{
    auto t = std::string(trim(text));
    auto pos = t.find_first_not_of("0123456789.+-eE");
    // Exponent letters are ambiguous with unit suffixes only for 'e', which no unit starts with.
    std::string number = t.substr(0, pos);
    std::string unit = pos == std::string::npos ? "" : std::string(trim(t.substr(pos)));
    double factor = 1.0;
    if(unit.empty() || unit == "s") factor = 1.0;
    else if(unit == "min") factor = 60.0;
    else if(unit == "h") factor = 3600.0;
    else if(unit == "d" || unit == "day") factor = 86400.0;
    else throw InputError("unknown time unit in '" + t + "'");
    return parseNumber(number) * factor;
}

auto ConfigSection::find(std::string_view key) const -> const ConfigEntry*
{
    for(const auto& e : entries)
        if(e.key == key) return &e;
    return nullptr;
}

auto ConfigSection::label() const -> std::string
{
    return name.empty() ? "[" + kind + "]" : "[" + kind + " " + name + "]";
}

auto ConfigSection::text(std::string_view key) const -> std::optional<std::string>
{
    if(auto e = find(key)) return e->value;
    return std::nullopt;
}

auto ConfigSection::requireText(std::string_view key) const -> std::string
{
    if(auto e = find(key)) return e->value;
    throw InputError(label() + " (line " + std::to_string(line) + "): missing key '" + std::string(key) + "'");
}

auto ConfigSection::number(std::string_view key, double fallback) const -> double
{
    auto e = find(key);
    if(!e) return fallback;
    try { return parseNumber(e->value); }
    catch(const InputError& err)
    {
        throw InputError(label() + " line " + std::to_string(e->line) + ": " + err.what());
    }
}

auto ConfigSection::requireNumber(std::string_view key) const -> double
{
    requireText(key);
    return number(key, 0.0);
}

auto ConfigSection::integer(std::string_view key, long fallback) const -> long
{
    auto e = find(key);
    if(!e) return fallback;
    auto value = number(key, 0.0);
    if(value != static_cast<double>(static_cast<long>(value)))
        throw InputError(label() + " line " + std::to_string(e->line) + ": '" + e->value + "' is not an integer");
    return static_cast<long>(value);
}

auto ConfigSection::boolean(std::string_view key, bool fallback) const -> bool
{
    auto e = find(key);
    if(!e) return fallback;
    if(e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if(e->value == "false" || e->value == "no" || e->value == "0") return false;
    throw InputError(label() + " line " + std::to_string(e->line) + ": '" + e->value + "' is not a boolean");
}

void ConfigSection::allowKeys(std::initializer_list<std::string_view> allowed) const
{
    for(const auto& e : entries)
        if(std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
            throw InputError(label() + " line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
}

auto Config::parse(std::string_view text, std::string source) -> Config
{
    Config config;
    config.m_source = std::move(source);
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineNo = 0;
    ConfigSection* current = nullptr;
    auto fail = [&](const std::string& msg) {
        throw InputError(config.m_source + ":" + std::to_string(lineNo) + ": " + msg);
    };
    while(std::getline(in, raw))
    {
        ++lineNo;
        auto hash = raw.find_first_of("#;");
        auto line = trim(std::string_view(raw).substr(0, hash));
        if(line.empty()) continue;
        if(line.front() == '[')
        {
            if(line.back() != ']') fail("unterminated section header");
            auto inner = trim(line.substr(1, line.size() - 2));
            if(inner.empty()) fail("empty section header");
            auto space = inner.find_first_of(" \t");
            ConfigSection section;
            section.kind = std::string(inner.substr(0, space));
            if(space != std::string_view::npos)
                section.name = std::string(trim(inner.substr(space)));
            section.line = lineNo;
            for(const auto& other : config.m_sections)
                if(other.kind == section.kind && other.name == section.name)
                    fail("duplicate section " + section.label());
            config.m_sections.push_back(std::move(section));
            current = &config.m_sections.back();
            continue;
        }
        auto eq = line.find('=');
        if(eq == std::string_view::npos) fail("expected 'key = value'");
        if(!current) fail("entry outside of any section");
        auto key = std::string(trim(line.substr(0, eq)));
        auto value = std::string(trim(line.substr(eq + 1)));
        if(key.empty()) fail("empty key");
        if(current->find(key)) fail("duplicate key '" + key + "' in " + current->label());
        current->entries.push_back({key, value, lineNo});
    }
    return config;
}

auto Config::load(const std::string& path) -> Config
{
    std::ifstream file(path);
    if(!file) throw InputError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << file.rdbuf();
    return parse(buffer.str(), path);
}

auto Config::sectionsOf(std::string_view kind) const -> std::vector<const ConfigSection*>
{
    std::vector<const ConfigSection*> result;
    for(const auto& s : m_sections)
        if(s.kind == kind) result.push_back(&s);
    return result;
}

auto Config::section(std::string_view kind) const -> const ConfigSection*
{
    return section(kind, "");
}

auto Config::section(std::string_view kind, std::string_view name) const -> const ConfigSection*
{
    for(const auto& s : m_sections)
        if(s.kind == kind && s.name == name) return &s;
    return nullptr;
}

auto Config::requireSection(std::string_view kind) const -> const ConfigSection&
{
    return requireSection(kind, "");
}

auto Config::requireSection(std::string_view kind, std::string_view name) const -> const ConfigSection&
{
    if(auto s = section(kind, name)) return *s;
    auto label = name.empty() ? "[" + std::string(kind) + "]" : "[" + std::string(kind) + " " + std::string(name) + "]";
    throw InputError(m_source + ": missing section " + label);
}

void Config::allowSections(std::initializer_list<std::string_view> kinds) const
{
    for(const auto& s : m_sections)
        if(std::find(kinds.begin(), kinds.end(), s.kind) == kinds.end())
            throw InputError(m_source + ":" + std::to_string(s.line) + ": unknown section " + s.label());
}

auto loadSystem(const Config& config) -> ChemicalSystem
{
    const auto& elements = config.requireSection("elements");
    elements.allowKeys({"labels"});
    auto labels = splitWords(elements.requireText("labels"));

    std::vector<PhaseDefinition> phases;
    for(const auto* s : config.sectionsOf("phase"))
    {
        s->allowKeys({"kind", "activity", "solvent"});
        if(s->name.empty()) throw InputError(s->label() + " needs a name");
        PhaseDefinition def;
        def.name = s->name;
        def.kind = phaseKindFromString(s->requireText("kind"));
        def.solvent = s->text("solvent").value_or("");
        phases.push_back(def);
    }

    std::vector<SpeciesDefinition> species;
    for(const auto* s : config.sectionsOf("species"))
    {
        s->allowKeys({"phase", "formula", "mu0", "dmu0_dT", "dmu0_dP", "molar_volume"});
        if(s->name.empty()) throw InputError(s->label() + " needs a name");
        SpeciesDefinition def;
        def.name = s->name;
        def.phase = s->requireText("phase");
        def.formula = parseFormula(s->requireText("formula"));
        def.molarVolume = s->number("molar_volume", 0.0);
        species.push_back(def);
    }
    return buildSystem(labels, species, phases);
}

} // namespace smarteq
