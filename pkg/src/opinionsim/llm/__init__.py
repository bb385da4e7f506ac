from .gateway import (BackendReply, ChatExchange, EndpointPool, EndpointSpec, GatewayError, HTTPBackend,
                      PoolExhausted, SamplingPerturbation, TokenBucket, TransportError, UsageKind)
from .jsonrepair import ResponseParseError, parse_json_object
from .mock import (MalformedInjector, MockBackend, PersonaScript, ScriptedSequence, echo_script, mock_complete,
                   mock_pool)
