"""Conversation transcript and the human-in-the-loop message-processing state machine.

A conversation receives messages one at a time. Depending on the HIL mode,
each non-terminating message is either answered automatically or escalated to
a human once the auto-reply counter reaches its threshold. The human can
terminate the conversation, skip (let the auto path answer), or intercept
with replacement content, which resets the counter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Iterable

TERMINATION_TOKEN = "TERMINATE"


class MessageKind(str, Enum):
    TASK = "TASK"
    REPLY = "REPLY"
    FEEDBACK = "FEEDBACK"
    TERMINATION = "TERMINATION"


class HilMode(str, Enum):
    NEVER = "NEVER"
    TERMINATE = "TERMINATE"


class HilChoice(str, Enum):
    TERMINATE = "TERMINATE"
    SKIP = "SKIP"
    INTERCEPT = "INTERCEPT"


class ConversationError(RuntimeError):
    """State violation, e.g. feeding a message to an inactive conversation."""


@dataclass
class Message:
    sender: str
    recipient: str
    content: str
    kind: MessageKind = MessageKind.TASK
    seq: int = 0
    timestamp: str = ""

    def __post_init__(self) -> None:
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat()

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "sender": self.sender,
            "recipient": self.recipient,
            "kind": self.kind.value,
            "content": self.content,
            "timestamp": self.timestamp,
        }


@dataclass
class HilDecision:
    choice: HilChoice
    replacement_content: str | None = None

    def __post_init__(self) -> None:
        if self.choice is HilChoice.INTERCEPT and not self.replacement_content:
            raise ValueError("INTERCEPT decision requires non-empty replacement_content")


@dataclass
class ConversationState:
    """Single-owner state advanced by one logical thread at a time.

    The transcript records the replies this machine produced; incoming
    messages are consumed inputs. Content of appended messages is never
    mutated afterwards.
    """

    mode: HilMode = HilMode.TERMINATE
    max_replies: int = 3
    counter: int = 0
    conversation_active: bool = True
    transcript: list[Message] = field(default_factory=list)
    _next_seq: int = 1

    def __post_init__(self) -> None:
        if self.max_replies < 1:
            raise ValueError("max_replies must be >= 1")

    @property
    def last_reply(self) -> Message | None:
        return self.transcript[-1] if self.transcript else None

    def _append(self, message: Message) -> Message:
        message.seq = self._next_seq
        self._next_seq += 1
        self.transcript.append(message)
        return message


AutoReplyFn = Callable[[Message], Message]
HumanFn = Callable[[Message], HilDecision]


def is_termination_message(m: Message) -> bool:
    """True iff the message is an explicit termination or its trimmed content
    ends with the literal TERMINATE token (uppercase, on a word boundary)."""
    if m.kind is MessageKind.TERMINATION:
        return True
    trimmed = m.content.strip()
    if trimmed == TERMINATION_TOKEN:
        return True
    if not trimmed.endswith(TERMINATION_TOKEN):
        return False
    boundary = trimmed[-len(TERMINATION_TOKEN) - 1]
    return not (boundary.isalnum() or boundary == "_")


def process_message(
    state: ConversationState,
    m: Message,
    auto_reply: AutoReplyFn,
    human: HumanFn,
) -> ConversationState:
    """Advance the conversation by one received message.

    Exactly one of: the conversation deactivates (termination message or a
    human TERMINATE), or exactly one reply is appended to the transcript.
    The counter increments on threshold-gated auto-replies, stays put in
    NEVER mode and on SKIP, and resets to 0 on INTERCEPT.
    """
    if not state.conversation_active:
        raise ConversationError("conversation is no longer active")

    if is_termination_message(m):
        state.conversation_active = False
        return state

    if state.mode is HilMode.NEVER:
        state._append(auto_reply(m))
        return state

    # TERMINATE mode
    if state.counter >= state.max_replies:
        decision = human(m)
        if decision.choice is HilChoice.TERMINATE:
            state.conversation_active = False
        elif decision.choice is HilChoice.SKIP:
            state._append(auto_reply(m))
        elif decision.choice is HilChoice.INTERCEPT:
            state._append(
                Message(
                    sender="human",
                    recipient=m.sender,
                    content=decision.replacement_content or "",
                    kind=MessageKind.FEEDBACK,
                )
            )
            state.counter = 0
    else:
        state._append(auto_reply(m))
        state.counter += 1
    return state


def run_conversation(
    state: ConversationState,
    message_source: Iterable[Message],
    auto_reply: AutoReplyFn,
    human: HumanFn,
) -> ConversationState:
    """Drive the conversation until termination or source exhaustion.

    Exhausting a finite source deactivates the conversation without
    appending anything, so the loop terminates for every finite source.
    """
    source = iter(message_source)
    while state.conversation_active:
        try:
            m = next(source)
        except StopIteration:
            state.conversation_active = False
            break
        process_message(state, m, auto_reply, human)
    return state
