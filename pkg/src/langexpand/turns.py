"""Per-turn training-sample expansion with token-level loss masks.

A conversation with T assistant turns becomes T samples. Sample k renders
turns 1..k (bos first, role prefixes, a terminator after every assistant
turn) and marks only the k-th assistant turn's content tokens plus its
terminator as loss-active; prompt tokens and earlier assistant turns are
masked out.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .errors import DataError, ValidationError
from .sft_quality import SftSample, validate_structure
from .tokenizer import TokenizerModel, encode

DEFAULT_ROLE_PREFIXES = {"user": "<|user|>", "assistant": "<|assistant|>"}
DEFAULT_MAX_TOKENS = 8192


@dataclass(frozen=True)
class ChatTemplate:
    bos: str
    eos: str
    role_prefixes: Dict[str, str] = field(
        default_factory=lambda: dict(DEFAULT_ROLE_PREFIXES)
    )
    # the reference figure does not show whether masked intermediate turns
    # carry a terminator; rendered-with-terminator is the default, flippable
    terminate_intermediate: bool = True

    def validate(self, tokenizer: TokenizerModel) -> None:
        for name, surface in (("bos", self.bos), ("eos", self.eos)):
            ids = encode(tokenizer, surface)
            if len(ids) != 1:
                raise ValidationError(
                    f"{name} surface {surface!r} encodes to {len(ids)} tokens;"
                    " special tokens must be atomic"
                )
        for role in ("user", "assistant"):
            if role not in self.role_prefixes:
                raise ValidationError(f"missing role prefix for {role!r}")

    def to_dict(self) -> dict:
        return {
            "bos": self.bos,
            "eos": self.eos,
            "role_prefixes": dict(self.role_prefixes),
            "terminate_intermediate": self.terminate_intermediate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChatTemplate":
        return cls(
            bos=d["bos"],
            eos=d["eos"],
            role_prefixes=dict(d.get("role_prefixes", DEFAULT_ROLE_PREFIXES)),
            terminate_intermediate=bool(d.get("terminate_intermediate", True)),
        )


@dataclass(frozen=True)
class TrainingSample:
    token_ids: Tuple[int, ...]
    loss_mask: Tuple[int, ...]
    source_id: str
    turn_index: int  # 1-based assistant turn this sample supervises

    def __post_init__(self):
        if len(self.token_ids) != len(self.loss_mask):
            raise DataError("token_ids and loss_mask lengths differ")
        if sum(self.loss_mask) < 1:
            raise DataError("loss mask has no active positions")

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "turn_index": self.turn_index,
            "token_ids": list(self.token_ids),
            "loss_mask": list(self.loss_mask),
        }


def _build(
    conversation: SftSample,
    template: ChatTemplate,
    tokenizer: TokenizerModel,
    upto_turn: int,
    target_turn: int,
) -> Tuple[List[int], List[int]]:
    """Token ids and mask for turns 1..upto_turn, loss on assistant turn
    `target_turn` (0 = no loss positions, used by render)."""
    bos_id = encode(tokenizer, template.bos)[0]
    eos_id = encode(tokenizer, template.eos)[0]
    ids: List[int] = [bos_id]
    mask: List[int] = [0]
    assistant_seen = 0
    for turn in conversation.conversation:
        if turn.role == "assistant" and assistant_seen == upto_turn:
            break
        prefix_ids = encode(tokenizer, template.role_prefixes[turn.role])
        ids.extend(prefix_ids)
        mask.extend([0] * len(prefix_ids))
        content_ids = encode(tokenizer, turn.text)
        ids.extend(content_ids)
        if turn.role == "assistant":
            assistant_seen += 1
            active = 1 if assistant_seen == target_turn else 0
            mask.extend([active] * len(content_ids))
            if assistant_seen == upto_turn or template.terminate_intermediate:
                ids.append(eos_id)
                mask.append(active)
        else:
            mask.extend([0] * len(content_ids))
    return ids, mask


def render(
    conversation: SftSample,
    template: ChatTemplate,
    tokenizer: TokenizerModel,
    upto_turn: int,
) -> List[int]:
    """Token ids for turns up to the `upto_turn`-th assistant turn.

    upto_turn 0 yields bos plus the first user turn only. render(k) is a
    strict prefix of render(k+1).
    """
    template.validate(tokenizer)
    n_assistant = len(conversation.assistant_turns())
    if upto_turn > n_assistant:
        raise ValidationError(
            f"upto_turn {upto_turn} exceeds {n_assistant} assistant turns"
        )
    ids, _ = _build(conversation, template, tokenizer, upto_turn, target_turn=0)
    return ids


def augment_turns(
    conversation: SftSample,
    template: ChatTemplate,
    tokenizer: TokenizerModel,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> List[TrainingSample]:
    """One TrainingSample per assistant turn."""
    template.validate(tokenizer)
    violation = validate_structure(conversation)
    if violation is not None:
        raise DataError(
            f"conversation {conversation.id}: {violation}; run flag_noise first"
        )
    for turn in conversation.assistant_turns():
        if not turn.text.strip():
            raise DataError(
                f"conversation {conversation.id}: empty assistant turn;"
                " run flag_noise first"
            )
    samples = []
    n_assistant = len(conversation.assistant_turns())
    for k in range(1, n_assistant + 1):
        ids, mask = _build(conversation, template, tokenizer, k, target_turn=k)
        if len(ids) > max_tokens:
            raise ValidationError(
                f"conversation {conversation.id}: sample for turn {k} has"
                f" {len(ids)} tokens, above max {max_tokens}"
            )
        samples.append(
            TrainingSample(
                token_ids=tuple(ids),
                loss_mask=tuple(mask),
                source_id=conversation.id,
                turn_index=k,
            )
        )
    return samples
