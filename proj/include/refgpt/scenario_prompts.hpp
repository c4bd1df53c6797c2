#pragma once

#include <string>
#include <string_view>

#include "refgpt/common.hpp"

namespace refgpt {
namespace prompts {

// Built-in generation prompt texts, one per (scenario, language). The same
// texts are shipped as editable files under assets/prompts/; a test keeps the
// two in sync. The Chinese texts are re-derived translations of the English
// ones and are marked unofficial in the README.
//
// Placeholders: {reference}, {dialogue_template}, {number_of_turns}.
// Structural markers (##Provided Information##, #Conversation Plan#, <chat>)
// are kept identical across languages so downstream tooling can anchor on
// them regardless of prompt language.

namespace detail {

inline constexpr std::string_view kPlanBlockEn =
    "#Conversation Plan# Example: \"<chat><Human 1>:(Word count requirement: x words)XXX "
    "<Assistant 1>: (Word count requirement: x words) XXX <Human 2>:(Word count requirement: x "
    "words)XXX <Assistant 2>: (Word count requirement: x words) XXX </chat>\", \"XXX\" is the "
    "requirement for the current conversation content of that role, and \"(Word count "
    "requirement: x words)\" specifies the minimum word count requirement for utterance of Human "
    "or Assistant. It must be noted: the conversation starts with <chat> as the beginning of the "
    "multi-round conversation and ends with </chat> as the end of the multi-round conversation.\n"
    "The following conversation follows this #Conversation Plan# and word count requirements: "
    "\"{dialogue_template}\", a total of {number_of_turns} turns of conversation.";

inline constexpr std::string_view kPlanBlockZh =
    "#Conversation Plan# 示例：\"<chat><Human 1>:(Word count requirement: x words)XXX "
    "<Assistant 1>: (Word count requirement: x words) XXX <Human 2>:(Word count requirement: x "
    "words)XXX <Assistant 2>: (Word count requirement: x words) XXX </chat>\"，其中\"XXX\"是对该"
    "角色当前对话内容的要求，\"(Word count requirement: x words)\"规定了Human或Assistant该条发言"
    "的最低字数要求。必须注意：对话以<chat>作为多轮对话的开始，以</chat>作为多轮对话的结束。\n"
    "下面的对话遵循该#Conversation Plan#和字数要求：\"{dialogue_template}\"，共{number_of_turns}"
    "轮对话。";

inline constexpr std::string_view kRefusalEn =
    "For unreasonable requests from Human (those that are harmful to society, immoral, or "
    "illegal), Assistant will refuse to answer and explain the reason for not answering, while "
    "also providing reasonable advice to avoid such actions.";

inline constexpr std::string_view kRefusalZh =
    "对于Human提出的不合理请求（危害社会、不道德或违法的请求），Assistant会拒绝回答并解释不回答的"
    "原因，同时给出合理的建议以避免此类行为。";

inline constexpr std::string_view kLanguageEn = "The whole conversation must be conducted in English.";
inline constexpr std::string_view kLanguageZh = "整段对话必须使用中文。";

inline std::string assemble(std::string_view task, std::string_view refusal,
                            std::string_view language_rule, std::string_view plan_block) {
  std::string out = "##Provided Information## {reference} ";
  out += task;
  out += " ";
  out += refusal;
  out += " ";
  out += language_rule;
  out += "\n";
  out += plan_block;
  return out;
}

inline constexpr std::string_view kTaskFactEn =
    "Based on the ##Provided Information## above and its relevant topic, expand it into a "
    "multi-round conversation. The conversation requires you to act as the chatbot Assistant and "
    "interact with a human, helping to solve the requests raised by the human. The human will ask "
    "multiple various questions/requests to the Assistant based on the information above (but the "
    "conversation should not include expressions like \"according to the above information\"), "
    "and the subsequent questions/requests will be a follow-up based on the previous conversation "
    "history. For every reasonable question/request posed by Human, Assistant should provide as "
    "detailed an answer as possible, offering further explanations or examples.";

inline constexpr std::string_view kTaskCodeCrEn =
    "Based on the ##Provided Information## above and its relevant topic, expand it into a "
    "multi-round conversation. Human has an idea / requirement / task / assignment / problem / "
    "difficulty related to the above code and wants to solve it with a computer program, but "
    "doesn't know how to do it. But Human doesn't know that the above code exists, so it can't be "
    "mentioned in conversation. Assistant needs to organize the above code into answers (which "
    "cannot be found by Human) according to Human's ideas, write specific program code for Human "
    "and explain it in detail so that Human's ideas can be realized. Based on this idea, Human "
    "would ask multiple questions and requests for specific code written by the Assistant, which "
    "will be follow-ups based on the previous conversation history.";

inline constexpr std::string_view kTaskCodeBgEn =
    "Based on the ##Provided Information## above and its relevant topic, expand it into a "
    "multi-round conversation. Human will write a piece of code with bugs based on the given code "
    "above (however, Human needs to hide the presence of the given code in the conversation, and "
    "it cannot be mentioned). They will then ask Assistant for help in fixing the bugs. Assistant "
    "needs to identify the mistakes in Human's code based on the given code above (but given code "
    "cannot be discovered by Human, and it cannot be mentioned in the conversation) and provide "
    "detailed explanations on how to fix the bugs, along with more explanations or examples if "
    "necessary. Afterward, Human and Assistant will continue the conversation around this code.";

inline constexpr std::string_view kTaskFactZh =
    "基于以上##Provided Information##及其相关主题，将其扩写成一段多轮对话。对话要求你扮演聊天机器"
    "人Assistant，与人类Human互动，帮助解决Human提出的请求。Human会基于以上信息提出多个不同的问题"
    "/请求（但对话中不应出现\"根据以上信息\"之类的表述），后续的问题/请求会在之前对话历史的基础上"
    "继续追问。对于Human提出的每个合理的问题/请求，Assistant要尽可能详细地回答，并给出进一步的解"
    "释或例子。";

inline constexpr std::string_view kTaskCodeCrZh =
    "基于以上##Provided Information##及其相关主题，将其扩写成一段多轮对话。Human有一个与上述代码"
    "相关的想法/需求/任务/作业/问题/困难，想用计算机程序来解决，但不知道怎么做。Human并不知道上述"
    "代码的存在，所以对话中不能提及它。Assistant需要根据Human的想法，把上述代码组织成回答（Human"
    "无法发现其来源），为Human编写具体的程序代码并详细解释，使Human的想法得以实现。基于这个想法，"
    "Human会就Assistant编写的具体代码提出多个问题和请求，这些问题会在之前对话历史的基础上继续追"
    "问。";

inline constexpr std::string_view kTaskCodeBgZh =
    "基于以上##Provided Information##及其相关主题，将其扩写成一段多轮对话。Human会基于上述给定代"
    "码写出一段有bug的代码（但Human需要在对话中隐藏给定代码的存在，不能提及它），然后请Assistant"
    "帮忙修复bug。Assistant需要根据上述给定代码找出Human代码中的错误（但给定代码不能被Human发现，"
    "对话中不能提及），并详细解释如何修复这些bug，必要时给出更多解释或例子。之后Human和Assistant"
    "会围绕这段代码继续对话。";

}  // namespace detail

inline std::string builtin_template(Scenario scenario, Language language) {
  using namespace detail;
  const bool en = language == Language::en;
  std::string_view task;
  switch (scenario) {
    case Scenario::fact:
    case Scenario::code_ds:  // code discussion uses the same task description
      task = en ? kTaskFactEn : kTaskFactZh;
      break;
    case Scenario::code_cr:
      task = en ? kTaskCodeCrEn : kTaskCodeCrZh;
      break;
    case Scenario::code_bg:
      task = en ? kTaskCodeBgEn : kTaskCodeBgZh;
      break;
  }
  return assemble(task, en ? kRefusalEn : kRefusalZh, en ? kLanguageEn : kLanguageZh,
                  en ? kPlanBlockEn : kPlanBlockZh);
}

}  // namespace prompts
}  // namespace refgpt
