__int64 __fastcall ssl_get_algorithm2(__int64 a1)
{
  __int64 result; // rax

  result = *(_QWORD *)(*(_QWORD *)(*(_QWORD *)(a1 + 128) + 848LL) + 40LL);
  if ( **(int **)(a1 + 8) > 770 && result == 49200 )
    return 131200LL;
  return result;
}
