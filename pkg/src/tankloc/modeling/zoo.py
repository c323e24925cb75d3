"""In-house attention backbones: lambda and halo/bottleneck hybrids.

No packaged implementation of these two architectures is available as a
dependency, so the registry carries house variants built from their
defining primitives: lambda layers (content + local-position lambdas),
blocked local self-attention with haloed keys, and global self-attention
in the final bottleneck stage. Channel widths follow the familiar
bottleneck-ResNet template so total parameter counts land near the
published sizes; exact equality is provider-dependent and not promised.

Both networks expect 256x256x3 input (the attention position tables are
built for the resulting feature grids).
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn


class LambdaLayer(nn.Module):
    """Content + position lambdas over the full feature map.

    Queries contract against a content lambda shared across positions and
    a position lambda produced by a local (r x r) convolution over the
    values, giving long-range interaction without pairwise attention maps.
    """

    def __init__(self, dim: int, dim_out: int, heads: int = 4, dim_k: int = 16, r: int = 9):
        super().__init__()
        if dim_out % heads:
            raise ValueError(f"dim_out {dim_out} not divisible by heads {heads}")
        self.heads = heads
        self.dim_k = dim_k
        self.dim_v = dim_out // heads
        self.to_q = nn.Conv2d(dim, dim_k * heads, 1, bias=False)
        self.to_k = nn.Conv2d(dim, dim_k, 1, bias=False)
        self.to_v = nn.Conv2d(dim, self.dim_v, 1, bias=False)
        self.norm_q = nn.BatchNorm2d(dim_k * heads)
        self.norm_v = nn.BatchNorm2d(self.dim_v)
        self.pos_conv = nn.Conv3d(1, dim_k, (1, r, r), padding=(0, r // 2, r // 2), bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, _, h, w = x.shape
        n = h * w
        q = self.norm_q(self.to_q(x)).reshape(b, self.heads, self.dim_k, n)
        k = self.to_k(x).reshape(b, self.dim_k, n).softmax(dim=-1)
        v = self.norm_v(self.to_v(x)).reshape(b, self.dim_v, n)

        content_lambda = torch.einsum("bkn,bvn->bkv", k, v)
        content_out = torch.einsum("bhkn,bkv->bhvn", q, content_lambda)

        pos_lambda = self.pos_conv(v.reshape(b, 1, self.dim_v, h, w))
        pos_lambda = pos_lambda.reshape(b, self.dim_k, self.dim_v, n)
        pos_out = torch.einsum("bhkn,bkvn->bhvn", q, pos_lambda)

        return (content_out + pos_out).reshape(b, self.heads * self.dim_v, h, w)


class RelPosBias2d(nn.Module):
    """Learned relative-position bias between two aligned 2D grids."""

    def __init__(self, q_size: tuple[int, int], k_size: tuple[int, int], k_offset: tuple[int, int], heads: int):
        super().__init__()
        qh, qw = q_size
        kh, kw = k_size
        oy, ox = k_offset
        span_h = qh + kh - 1
        span_w = qw + kw - 1
        self.table = nn.Parameter(torch.zeros(heads, span_h * span_w))
        qy, qx = torch.meshgrid(torch.arange(qh), torch.arange(qw), indexing="ij")
        ky, kx = torch.meshgrid(torch.arange(kh), torch.arange(kw), indexing="ij")
        rel_y = (ky.reshape(-1) + oy)[None, :] - qy.reshape(-1)[:, None] + (qh - 1 - oy)
        rel_x = (kx.reshape(-1) + ox)[None, :] - qx.reshape(-1)[:, None] + (qw - 1 - ox)
        self.register_buffer("index", (rel_y * span_w + rel_x).reshape(-1), persistent=False)
        self.q_len = qh * qw
        self.k_len = kh * kw

    def forward(self) -> torch.Tensor:
        return self.table[:, self.index].reshape(-1, self.q_len, self.k_len)


class HaloAttention(nn.Module):
    """Blocked local self-attention: queries per block, keys with a halo."""

    def __init__(self, dim: int, dim_out: int, feat_size: int, heads: int = 8, block: int = 8, halo: int = 2):
        super().__init__()
        if feat_size % block:
            raise ValueError(f"feature size {feat_size} not divisible by block {block}")
        if dim_out % heads:
            raise ValueError(f"dim_out {dim_out} not divisible by heads {heads}")
        self.heads = heads
        self.dim_head = dim_out // heads
        self.block = block
        self.halo = halo
        self.win = block + 2 * halo
        self.scale = self.dim_head**-0.5
        self.to_q = nn.Conv2d(dim, dim_out, 1, bias=False)
        self.to_kv = nn.Conv2d(dim, dim_out * 2, 1, bias=False)
        self.rel_bias = RelPosBias2d(
            (block, block), (self.win, self.win), (-halo, -halo), heads
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, _, h, w = x.shape
        nb = h // self.block
        q = self.to_q(x)
        kv = self.to_kv(x)
        kv = F.pad(kv, (self.halo,) * 4)

        # Blocks of queries: (b * nb^2, heads, block^2, dim_head)
        q = q.reshape(b, self.heads, self.dim_head, nb, self.block, nb, self.block)
        q = q.permute(0, 3, 5, 1, 4, 6, 2).reshape(-1, self.heads, self.block**2, self.dim_head)
        # Haloed key/value windows around each block.
        kv = F.unfold(kv, kernel_size=self.win, stride=self.block)
        kv = kv.reshape(b, 2, self.heads, self.dim_head, self.win**2, nb * nb)
        kv = kv.permute(1, 0, 5, 2, 4, 3).reshape(2, -1, self.heads, self.win**2, self.dim_head)
        k, v = kv[0], kv[1]

        attn = (q @ k.transpose(-1, -2)) * self.scale + self.rel_bias()
        out = attn.softmax(dim=-1) @ v
        out = out.reshape(b, nb, nb, self.heads, self.block, self.block, self.dim_head)
        out = out.permute(0, 3, 6, 1, 4, 2, 5).reshape(b, -1, h, w)
        return out


class GlobalAttention(nn.Module):
    """Full self-attention over the (small) final-stage feature grid."""

    def __init__(self, dim: int, dim_out: int, feat_size: int, heads: int = 4):
        super().__init__()
        if dim_out % heads:
            raise ValueError(f"dim_out {dim_out} not divisible by heads {heads}")
        self.heads = heads
        self.dim_head = dim_out // heads
        self.scale = self.dim_head**-0.5
        self.to_qkv = nn.Conv2d(dim, dim_out * 3, 1, bias=False)
        self.rel_bias = RelPosBias2d((feat_size, feat_size), (feat_size, feat_size), (0, 0), heads)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, _, h, w = x.shape
        n = h * w
        qkv = self.to_qkv(x).reshape(b, 3, self.heads, self.dim_head, n)
        q, k, v = qkv[:, 0], qkv[:, 1], qkv[:, 2]
        attn = (q.transpose(-1, -2) @ k) * self.scale + self.rel_bias()
        out = attn.softmax(dim=-1) @ v.transpose(-1, -2)
        return out.transpose(-1, -2).reshape(b, -1, h, w)


class _Bottleneck(nn.Module):
    """Pre-activation-free bottleneck with a pluggable spatial mixer."""

    expansion = 4

    def __init__(self, in_ch: int, planes: int, stride: int, mixer: str, feat_size: int, act):
        super().__init__()
        out_ch = planes * self.expansion
        self.conv1 = nn.Conv2d(in_ch, planes, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(planes)
        self.pool = nn.AvgPool2d(2) if stride == 2 and mixer != "conv" else None
        if mixer == "conv":
            self.mix = nn.Conv2d(planes, planes, 3, stride=stride, padding=1, bias=False)
        elif mixer == "lambda":
            self.mix = LambdaLayer(planes, planes)
        elif mixer == "halo":
            self.mix = HaloAttention(planes, planes, feat_size)
        elif mixer == "attn":
            self.mix = GlobalAttention(planes, planes, feat_size)
        else:
            raise ValueError(f"unknown mixer {mixer!r}")
        self.bn2 = nn.BatchNorm2d(planes)
        self.conv3 = nn.Conv2d(planes, out_ch, 1, bias=False)
        self.bn3 = nn.BatchNorm2d(out_ch)
        self.act = act
        if stride != 1 or in_ch != out_ch:
            self.shortcut = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False),
                nn.BatchNorm2d(out_ch),
            )
        else:
            self.shortcut = nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.act(self.bn1(self.conv1(x)))
        if self.pool is not None:
            out = self.pool(out)
        out = self.act(self.bn2(self.mix(out)))
        out = self.bn3(self.conv3(out))
        return self.act(out + self.shortcut(x))


class AttentionResNet(nn.Module):
    """Bottleneck ResNet skeleton with per-block mixer assignments."""

    def __init__(
        self,
        layers: tuple[int, ...],
        mixers: tuple[tuple[str, ...], ...],
        num_classes: int = 1000,
        stem_channels: tuple[int, int, int] = (24, 32, 64),
        input_side: int = 256,
    ):
        super().__init__()
        self.input_side = input_side
        act = nn.SiLU(inplace=True)
        c1, c2, c3 = stem_channels
        self.stem = nn.Sequential(
            nn.Conv2d(3, c1, 3, stride=2, padding=1, bias=False),
            nn.BatchNorm2d(c1),
            act,
            nn.Conv2d(c1, c2, 3, padding=1, bias=False),
            nn.BatchNorm2d(c2),
            act,
            nn.Conv2d(c2, c3, 3, padding=1, bias=False),
            nn.BatchNorm2d(c3),
            act,
            nn.MaxPool2d(3, stride=2, padding=1),
        )
        feat = input_side // 4
        in_ch = c3
        stages = []
        for si, (n_blocks, stage_mixers) in enumerate(zip(layers, mixers)):
            planes = 64 * 2**si
            stride = 1 if si == 0 else 2
            blocks = []
            for bi in range(n_blocks):
                s = stride if bi == 0 else 1
                if s == 2:
                    feat //= 2
                blocks.append(_Bottleneck(in_ch, planes, s, stage_mixers[bi], feat, act))
                in_ch = planes * _Bottleneck.expansion
            stages.append(nn.Sequential(*blocks))
        self.stages = nn.Sequential(*stages)
        self.global_pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Linear(in_ch, num_classes)

        for m in self.modules():
            if isinstance(m, (nn.Conv2d, nn.Conv3d)):
                nn.init.kaiming_normal_(m.weight, mode="fan_out", nonlinearity="relu")
            elif isinstance(m, nn.BatchNorm2d):
                nn.init.ones_(m.weight)
                nn.init.zeros_(m.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.stem(x)
        x = self.stages(x)
        x = self.global_pool(x).flatten(1)
        return self.head(x)


def lambda_resnet(num_classes: int = 1000) -> AttentionResNet:
    """26-layer bottleneck net with lambda mixers in the last two stages."""
    return AttentionResNet(
        layers=(2, 2, 2, 2),
        mixers=(
            ("conv", "conv"),
            ("conv", "conv"),
            ("conv", "lambda"),
            ("lambda", "lambda"),
        ),
        num_classes=num_classes,
    )


def lamhalobotnet(num_classes: int = 1000) -> AttentionResNet:
    """50-layer hybrid: lambda, halo, and global-attention final blocks."""
    return AttentionResNet(
        layers=(3, 4, 6, 3),
        mixers=(
            ("conv", "conv", "conv"),
            ("conv", "conv", "conv", "lambda"),
            ("conv", "conv", "conv", "conv", "conv", "halo"),
            ("conv", "attn", "attn"),
        ),
        num_classes=num_classes,
    )
