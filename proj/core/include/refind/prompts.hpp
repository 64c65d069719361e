#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace refind::prompts {

// Scoring prompt. Placeholders: {reference_passages}, {question}.
inline constexpr std::string_view kDetectorTemplate =
    "You are an assistant for answering questions.\n"
    "Refer to the references below and answer the following question.\n"
    "\n"
    "### References\n"
    "{reference_passages}\n"
    "\n"
    "### Question\n"
    "{question}\n"
    "\n"
    "### Answer";

// Editor prompt. Placeholders: {reference_passages}, {output}.
inline constexpr std::string_view kEditorTemplate =
    "Read the following references:\n"
    "{reference_passages}\n"
    "Please identify all the errors in the following text using the information in the references provided "
    "and suggest edits if necessary:\n"
    "[Text] {output}\n"
    "[Edited] ";

// "1. first\n2. second" -- empty for no passages.
std::string number_passages(const std::vector<std::string>& passages);

// Replaces each "{name}" placeholder once, left to right, without touching
// text that came from earlier substitutions.
std::string fill(std::string_view tmpl, const std::vector<std::pair<std::string_view, std::string_view>>& values);

}  // namespace refind::prompts
