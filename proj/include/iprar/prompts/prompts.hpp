#pragma once

#include "iprar/providers/provider.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace iprar::prompts {

/// One named prompt template. The serving role is fixed by the template id;
/// override files replace only the text.
struct Template {
    providers::Role role = providers::Role::Reasoner;
    std::string system;
    std::string user;
};

/** The full set of pipeline prompts, keyed by template id. Placeholders use
 * `{{name}}` syntax. Built-in defaults ship compiled in and are mirrored
 * verbatim by the prompts/ directory in the source tree; a configured
 * prompt_dir overrides individual templates by file name (`<id>.txt`, format:
 * a `[system]` line, system text, a `[user]` line, user text).
 */
class PromptLibrary {
public:
    static PromptLibrary builtin();
    /// Builtin plus per-file overrides from `dir`. Unknown file names error.
    static PromptLibrary with_overrides(const std::filesystem::path& dir);

    const Template& get(const std::string& template_id) const;
    std::vector<std::string> ids() const;

    /// Substitutes `{{key}}` placeholders; throws InvalidArgumentError if any
    /// placeholder remains unresolved afterwards.
    static std::string render(const std::string& text,
                              const std::map<std::string, std::string>& subs);

    /// Renders template `id` into a ready GenerationRequest.
    providers::GenerationRequest make_request(const std::string& id, const std::string& key,
                                              const std::map<std::string, std::string>& subs) const;

    /// Parses the on-disk template format (text only; role comes from the id).
    static std::pair<std::string, std::string> parse_template_file(const std::string& contents,
                                                                   const std::string& origin);

private:
    std::map<std::string, Template> templates_;
};

}  // namespace iprar::prompts
