"""ReAct-style LLM scheduling agent: prompts, parsing, providers and the decision loop."""

from .loop import AgentBudgetExceeded, AgentRun, OverheadReport, run_react_loop
from .parsing import ParseFailure, parse_response
from .prompt import ScratchpadEntry, build_prompt, fairness_indicators
from .providers import (
    AnthropicCompatibleProvider,
    CompletionResult,
    GreedySJFProvider,
    OpenAICompatibleProvider,
    Provider,
    ProviderConfig,
    ProviderError,
    ProviderKind,
    ScriptedProvider,
    ScriptExhausted,
    complete,
    make_provider,
    mock_provider,
)

__all__ = [
    "AgentBudgetExceeded",
    "AgentRun",
    "AnthropicCompatibleProvider",
    "CompletionResult",
    "GreedySJFProvider",
    "OpenAICompatibleProvider",
    "OverheadReport",
    "ParseFailure",
    "Provider",
    "ProviderConfig",
    "ProviderError",
    "ProviderKind",
    "ScratchpadEntry",
    "ScriptExhausted",
    "ScriptedProvider",
    "build_prompt",
    "complete",
    "fairness_indicators",
    "make_provider",
    "mock_provider",
    "parse_response",
    "run_react_loop",
]
